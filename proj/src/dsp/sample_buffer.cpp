#include "easlab/dsp/sample_buffer.hpp"

#include <string>
#include <utility>

#include "easlab/error.hpp"

namespace easlab::dsp {

SampleBuffer::SampleBuffer(Eigen::VectorXd s, int rate)
    : samples(std::move(s)), sample_rate(rate) {
  validate(*this);
}

void validate(const SampleBuffer& buffer) {
  if (buffer.sample_rate <= 0) {
    throw InvalidArgument("sample rate must be positive, got " +
                          std::to_string(buffer.sample_rate));
  }
  if (!buffer.samples.allFinite()) {
    throw InvalidArgument("sample buffer contains non-finite values");
  }
}

}  // namespace easlab::dsp
