#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/mmse/mmse.hpp"
#include "easlab/nn/ddae.hpp"
#include "easlab/nn/fcn.hpp"

namespace easlab::eval {

// Must be safe to call concurrently.
using EnhanceFn = std::function<dsp::SampleBuffer(const dsp::SampleBuffer&)>;

struct Method {
  std::string name;
  EnhanceFn enhance;
};

struct MethodResources {
  mmse::MmseConfig mmse;
  std::shared_ptr<const nn::FcnModel> fcn;
  std::shared_ptr<const nn::DdaeModel> ddae;
};

// Known names: noisy, mmse, ddae, fcn. Learned methods need their model.
Method make_method(const std::string& name, const MethodResources& resources);
std::vector<std::string> known_methods();

}  // namespace easlab::eval
