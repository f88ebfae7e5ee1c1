#include "easlab/nn/ddae.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "easlab/error.hpp"

namespace easlab::nn {

DenseLayer DenseLayer::make(int in, int out, Activation act) {
  if (in < 1 || out < 1) throw InvalidArgument("dense layer dimensions must be positive");
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.activation = act;
  layer.weight = Tensor({out, in});
  layer.bias = Tensor({out});
  return layer;
}

DdaeModel DdaeModel::create(int frame_len, int hop, int context, const std::vector<int>& hidden,
                            std::uint64_t seed) {
  if (frame_len <= 0 || hop <= 0 || hop > frame_len) throw InvalidArgument("bad DDAE framing");
  if (context < 0) throw InvalidArgument("DDAE context must be >= 0");
  DdaeModel model;
  model.frame_len = frame_len;
  model.hop = hop;
  model.context = context;
  std::mt19937_64 rng(seed);
  int in = model.input_dim();
  for (int h : hidden) {
    DenseLayer layer = DenseLayer::make(in, h, Activation::Tanh);
    glorot_uniform(layer.weight, in, h, rng);
    model.layers.push_back(std::move(layer));
    in = h;
  }
  DenseLayer out = DenseLayer::make(in, model.n_bins(), Activation::Identity);
  glorot_uniform(out.weight, in, model.n_bins(), rng);
  model.layers.push_back(std::move(out));
  model.in_mean = Eigen::VectorXd::Zero(model.input_dim());
  model.in_std = Eigen::VectorXd::Ones(model.input_dim());
  model.out_mean = Eigen::VectorXd::Zero(model.n_bins());
  model.out_std = Eigen::VectorXd::Ones(model.n_bins());
  return model;
}

void DdaeModel::validate() const {
  if (layers.empty()) throw InvalidArgument("DDAE has no layers");
  if (layers.front().in != input_dim()) throw InvalidArgument("DDAE input dimension mismatch");
  if (layers.back().out != n_bins()) throw InvalidArgument("DDAE output dimension mismatch");
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i].in != layers[i - 1].out) throw InvalidArgument("DDAE layer size mismatch");
  }
  if (in_mean.size() != input_dim() || in_std.size() != input_dim() ||
      out_mean.size() != n_bins() || out_std.size() != n_bins()) {
    throw InvalidArgument("DDAE normalization statistics have the wrong size");
  }
  if ((in_std.array() <= 0.0).any() || (out_std.array() <= 0.0).any()) {
    throw InvalidArgument("DDAE normalization scales must be positive");
  }
}

std::vector<Tensor*> DdaeModel::parameters() {
  std::vector<Tensor*> params;
  for (DenseLayer& layer : layers) {
    params.push_back(&layer.weight);
    params.push_back(&layer.bias);
  }
  return params;
}

Eigen::MatrixXd log_power(const dsp::Spectrogram& spec) {
  return (spec.frames.cwiseAbs2().array() + kLogPowerFloor).log().matrix().transpose();
}

Eigen::MatrixXd stack_context(const Eigen::MatrixXd& frames, int context) {
  const Eigen::Index bins = frames.rows();
  const Eigen::Index n = frames.cols();
  Eigen::MatrixXd stacked((2 * context + 1) * bins, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (int c = -context; c <= context; ++c) {
      const Eigen::Index src = std::clamp<Eigen::Index>(m + c, 0, n - 1);
      stacked.block((c + context) * bins, m, bins, 1) = frames.col(src);
    }
  }
  return stacked;
}

Eigen::MatrixXd ddae_forward(const DdaeModel& model, const Eigen::MatrixXd& stacked,
                             DdaeTrace* trace) {
  model.validate();
  if (stacked.rows() != model.input_dim()) throw InvalidArgument("DDAE input has wrong height");
  Eigen::MatrixXd x =
      (stacked.colwise() - model.in_mean).array().colwise() / model.in_std.array();
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(x);
  }
  for (const DenseLayer& layer : model.layers) {
    Eigen::MatrixXd pre = layer.matrix() * x;
    pre.colwise() += layer.bias.values;
    x = activate(layer.activation, std::move(pre));
    if (trace) trace->activations.push_back(x);
  }
  return x;
}

void ddae_backward(DdaeModel& model, const DdaeTrace& trace, const Eigen::MatrixXd& grad_output) {
  if (trace.activations.size() != model.layers.size() + 1) {
    throw InvalidArgument("DDAE trace does not match model depth");
  }
  Eigen::MatrixXd g = grad_output;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    DenseLayer& layer = model.layers[l];
    if (!layer.weight.has_grad()) layer.weight.zero_grad();
    if (!layer.bias.has_grad()) layer.bias.zero_grad();
    const Eigen::MatrixXd gp = activation_backward(layer.activation, trace.activations[l + 1], g);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wg(
        layer.weight.grad.data(), layer.out, layer.in);
    wg.noalias() += gp * trace.activations[l].transpose();
    layer.bias.grad += gp.rowwise().sum();
    if (l > 0) g = layer.matrix().transpose() * gp;
  }
}

namespace {

dsp::Spectrogram padded_spectrogram(const DdaeModel& model, const dsp::SampleBuffer& x) {
  const dsp::StftConfig cfg = model.stft_config();
  Eigen::Index padded = std::max<Eigen::Index>(x.size(), cfg.frame_len);
  const Eigen::Index over = (padded - cfg.frame_len) % cfg.hop;
  if (over != 0) padded += cfg.hop - over;
  dsp::SampleBuffer work(Eigen::VectorXd::Zero(padded), x.sample_rate);
  work.samples.head(x.size()) = x.samples;
  return dsp::stft(work, cfg);
}

}  // namespace

Eigen::MatrixXd ddae_input_features(const DdaeModel& model, const dsp::SampleBuffer& noisy) {
  if (noisy.empty()) throw InvalidArgument("DDAE input is empty");
  return stack_context(log_power(padded_spectrogram(model, noisy)), model.context);
}

Eigen::MatrixXd ddae_target_features(const DdaeModel& model, const dsp::SampleBuffer& clean) {
  if (clean.empty()) throw InvalidArgument("DDAE target is empty");
  return log_power(padded_spectrogram(model, clean));
}

dsp::SampleBuffer ddae_enhance(const DdaeModel& model, const dsp::SampleBuffer& noisy) {
  if (noisy.empty()) throw InvalidArgument("DDAE input is empty");
  model.validate();
  return dsp::process_spectrum(noisy, model.stft_config(), [&](dsp::Spectrogram& spec) {
    const Eigen::MatrixXd stacked = stack_context(log_power(spec), model.context);
    const Eigen::MatrixXd out = ddae_forward(model, stacked);
    const Eigen::MatrixXd lps =
        (out.array().colwise() * model.out_std.array()).colwise() + model.out_mean.array();
    for (Eigen::Index m = 0; m < spec.n_frames(); ++m) {
      for (Eigen::Index k = 0; k < spec.n_bins(); ++k) {
        const std::complex<double> y = spec.frames(m, k);
        const double magnitude = std::sqrt(std::exp(lps(k, m)));
        const double phase = std::arg(y);
        spec.frames(m, k) = std::polar(magnitude, phase);
      }
    }
  });
}

}  // namespace easlab::nn
