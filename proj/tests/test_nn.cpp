#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "easlab/dsp/signal.hpp"
#include "easlab/dsp/stft.hpp"
#include "easlab/error.hpp"
#include "easlab/nn/conv1d.hpp"
#include "easlab/nn/ddae.hpp"
#include "easlab/nn/fcn.hpp"
#include "easlab/nn/grad_check.hpp"
#include "easlab/nn/losses.hpp"
#include "easlab/nn/model_io.hpp"
#include "easlab/nn/train.hpp"
#include "easlab/stoi/stoi.hpp"
#include "fixtures.hpp"

using namespace easlab;
using dsp::SampleBuffer;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

void randomize(nn::Conv1dLayer& layer, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& w : layer.weight.values) w = u(rng);
  for (double& b : layer.bias.values) b = u(rng);
}

// Straight from the definition, one output sample at a time.
Eigen::MatrixXd nested_loop_conv(const nn::Conv1dLayer& l, const Eigen::MatrixXd& in) {
  const Eigen::Index T = in.cols();
  Eigen::MatrixXd out(l.out_channels, T);
  for (int c = 0; c < l.out_channels; ++c) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double acc = l.has_bias ? l.bias.values[c] : 0.0;
      for (int ci = 0; ci < l.in_channels; ++ci) {
        for (int k = 0; k < l.width; ++k) {
          const Eigen::Index src = t + k - l.width / 2;
          if (src >= 0 && src < T) acc += l.weight.values[(c * l.in_channels + ci) * l.width + k] * in(ci, src);
        }
      }
      out(c, t) = l.activation == nn::Activation::Tanh ? std::tanh(acc) : acc;
    }
  }
  return out;
}

// Optional floor_db adds a recording noise floor that far below the speech,
// so clean log spectra never hit the digital-silence floor.
std::vector<nn::UtterancePair> toy_pairs(int n, double seconds, std::uint64_t seed, double floor_db = 0.0) {
  std::vector<nn::UtterancePair> data;
  const SampleBuffer noise = testing::white_noise(seed + 1000, seconds * n + 1.0);
  for (int i = 0; i < n; ++i) {
    SampleBuffer clean = testing::synthetic_speech(seed + i, seconds);
    if (floor_db > 0.0) {
      clean.samples += std::pow(10.0, -floor_db / 20.0) * testing::white_noise(seed + 7777 + i, seconds).samples;
    }
    const auto mix = dsp::mix_at_snr(clean, noise, 0.0, seed + i);
    data.push_back({mix.mixture, clean, "u" + std::to_string(i)});
  }
  return data;
}

}  // namespace

TEST_CASE("conv1d: identity tap and zero weights") {
  auto l = nn::Conv1dLayer::make(1, 1, 3, nn::Activation::Identity);
  l.w(0, 0, 1) = 1.0;
  const Eigen::MatrixXd x = random_matrix(1, 50, 1);
  CHECK((nn::conv1d_forward(l, x) - x).cwiseAbs().maxCoeff() == 0.0);
  l.weight.values.setZero();
  CHECK(nn::conv1d_forward(l, x).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(nn::conv1d_forward(l, random_matrix(2, 50, 1)), InvalidArgument);
  CHECK_THROWS_AS(nn::Conv1dLayer::make(1, 0, 3, nn::Activation::Identity), InvalidArgument);
}

TEST_CASE("conv1d: two layers against nested loops") {
  for (int width : {1, 4, 5, 33}) {
    auto a = nn::Conv1dLayer::make(1, 3, width, nn::Activation::Tanh);
    auto b = nn::Conv1dLayer::make(3, 1, width, nn::Activation::Identity, false);
    randomize(a, 10 + width);
    randomize(b, 20 + width);
    const Eigen::MatrixXd x = random_matrix(1, 64, width);
    const Eigen::MatrixXd fast = nn::conv1d_forward(b, nn::conv1d_forward(a, x));
    const Eigen::MatrixXd slow = nested_loop_conv(b, nested_loop_conv(a, x));
    CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("conv1d backward against finite differences") {
  auto l = nn::Conv1dLayer::make(2, 3, 5, nn::Activation::Tanh);
  randomize(l, 3);
  const Eigen::MatrixXd x = random_matrix(2, 40, 4);
  const Eigen::MatrixXd r = random_matrix(3, 40, 5);  // loss = <r, out>
  const Eigen::MatrixXd out = nn::conv1d_forward(l, x);
  l.weight.zero_grad();
  l.bias.zero_grad();
  const Eigen::MatrixXd gx = nn::conv1d_backward(l, x, out, r);

  const Eigen::VectorXd xv = x.reshaped();
  auto f_in = [&](const Eigen::VectorXd& v) {
    return (nn::conv1d_forward(l, v.reshaped(2, 40)).array() * r.array()).sum();
  };
  CHECK(nn::grad_check(f_in, xv, gx.reshaped(), {1e-5, 80}).max_relative_error < 1e-7);

  const Eigen::VectorXd w0 = l.weight.values;
  auto f_w = [&](const Eigen::VectorXd& w) {
    nn::Conv1dLayer m = l;
    m.weight.values = w;
    return (nn::conv1d_forward(m, x).array() * r.array()).sum();
  };
  CHECK(nn::grad_check(f_w, w0, l.weight.grad, {1e-5, 30}).max_relative_error < 1e-7);
  auto f_b = [&](const Eigen::VectorXd& b) {
    nn::Conv1dLayer m = l;
    m.bias.values = b;
    return (nn::conv1d_forward(m, x).array() * r.array()).sum();
  };
  CHECK(nn::grad_check(f_b, l.bias.values, l.bias.grad, {1e-5, 3}).max_relative_error < 1e-7);
}

TEST_CASE("fcn: arbitrary lengths, identity, linearity") {
  const nn::FcnModel m = nn::FcnModel::create(nn::FcnArchitecture::desk(), 7);
  for (Eigen::Index n : {257, 4000, 16000, 7919}) {
    const SampleBuffer x(random_matrix(n, 1, n).col(0) * 0.1, 16000);
    CHECK(nn::fcn_forward(m, x).size() == n);
  }
  const SampleBuffer x = testing::synthetic_speech(1, 0.5);
  CHECK(nn::fcn_forward(nn::FcnModel::identity(9), x).samples == x.samples);

  nn::FcnModel lin = nn::FcnModel::create({3, 4, 7, nn::Activation::Identity}, 3);
  for (auto& l : lin.layers) l.bias.values.setZero();
  const SampleBuffer x2(2.0 * x.samples, x.sample_rate);
  CHECK((nn::fcn_forward(lin, x2).samples - 2.0 * nn::fcn_forward(lin, x).samples).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(nn::fcn_forward(m, SampleBuffer(Eigen::VectorXd(0), 16000)), InvalidArgument);
  CHECK(m.layers.back().out_channels == 1);
  CHECK(m.layers.back().activation == nn::Activation::Identity);
  CHECK(m.layers.front().in_channels == 1);
}

TEST_CASE("fcn forward equals the layer-by-layer oracle") {
  nn::FcnModel m = nn::FcnModel::create({3, 4, 9, nn::Activation::Tanh}, 11);
  for (std::size_t i = 0; i < m.layers.size(); ++i) randomize(m.layers[i], 40 + i);
  const Eigen::MatrixXd x = random_matrix(1, 300, 2) * 0.5;
  Eigen::MatrixXd h = x;
  for (const auto& l : m.layers) h = nested_loop_conv(l, h);
  CHECK((nn::fcn_forward(m, x.row(0).transpose()) - h.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("model validation") {
  nn::FcnModel m = nn::FcnModel::create(nn::FcnArchitecture::desk(), 1);
  m.layers.back().activation = nn::Activation::Tanh;
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
  m = nn::FcnModel::create(nn::FcnArchitecture::desk(), 1);
  m.layers.erase(m.layers.begin());
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
}

TEST_CASE("loss_mse") {
  const SampleBuffer a = testing::white_noise(1, 0.1);
  CHECK(nn::loss_mse(a, a).total == 0.0);
  const SampleBuffer z(Eigen::VectorXd::Zero(100), 16000), o(Eigen::VectorXd::Ones(100), 16000);
  CHECK(nn::loss_mse(o, z).total == 100.0);
  const SampleBuffer b = testing::white_noise(2, 0.1);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += (a.samples[i] - b.samples[i]) * (a.samples[i] - b.samples[i]);
  CHECK(std::abs(nn::loss_mse(a, b).total - sum) < 1e-12);
  CHECK_THROWS_AS(nn::loss_mse(a, z), InvalidArgument);
}

TEST_CASE("loss_stoi forward is minus the metric") {
  std::vector<SampleBuffer> est, ref;
  double metric = 0.0;
  for (std::uint64_t u = 0; u < 10; ++u) {
    const SampleBuffer clean = testing::synthetic_speech(50 + u, 1.2);
    const SampleBuffer noisy =
        dsp::mix_at_snr(clean, testing::street_noise(60 + u, 2.0), -5.0 + u, u).mixture;
    const double single = nn::loss_stoi({noisy}, {clean}).total;
    CHECK(std::abs(single + stoi::stoi(clean, noisy)) < 1e-6);
    metric += stoi::stoi(clean, noisy);
    est.push_back(noisy);
    ref.push_back(clean);
  }
  const nn::LossValue v = nn::loss_stoi(est, ref);
  CHECK(std::abs(v.total + metric / 10.0) < 1e-6);
  CHECK(nn::loss_stoi(ref, ref).total == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(nn::loss_stoi({testing::synthetic_speech(1, 0.3)}, {testing::synthetic_speech(1, 0.3)}),
                  InvalidArgument);
  CHECK_THROWS_AS(nn::loss_stoi({}, {}), InvalidArgument);
}

TEST_CASE("loss_combined") {
  std::vector<SampleBuffer> est, ref;
  for (std::uint64_t u = 0; u < 3; ++u) {
    const SampleBuffer clean = testing::synthetic_speech(70 + u, 1.2 + 0.1 * u);
    ref.push_back(clean);
    est.push_back(dsp::mix_at_snr(clean, testing::white_noise(80 + u, 2.0), 0.0, u).mixture);
  }
  CHECK(nn::loss_combined(est, ref, 0.0).total == nn::loss_stoi(est, ref).total);
  for (double alpha : {0.0, 1.0, 1e4}) {
    CHECK(nn::loss_combined(ref, ref, alpha).total == doctest::Approx(-1.0).epsilon(1e-9));
  }
  double composed = 0.0;
  for (std::size_t u = 0; u < est.size(); ++u) {
    composed += nn::loss_mse(est[u], ref[u]).total / static_cast<double>(est[u].size()) -
                stoi::stoi(ref[u], est[u]);
  }
  const nn::LossValue v = nn::loss_combined(est, ref, 1.0);
  CHECK(std::abs(v.total - composed / 3.0) < 1e-9);
  CHECK(v.total == doctest::Approx(v.mse_term - v.stoi_term).epsilon(1e-12));
  CHECK_THROWS_AS(nn::loss_combined(est, ref, -1.0), InvalidArgument);
}

TEST_CASE("STOI gradient on a 4000-sample utterance") {
  // At the 10 kHz analysis rate 4000 samples are exactly 30 frames, so the
  // signal must be active throughout.
  const SampleBuffer clean = testing::white_noise(3, 0.4, 10000);
  const SampleBuffer est(clean.samples + 0.8 * testing::white_noise(4, 0.4, 10000).samples, 10000);
  REQUIRE(clean.size() == 4000);
  const auto r = nn::grad_check_objective(nn::Objective::Stoi, 0.0, est, clean, {1e-4, 50});
  CHECK(r.probes == 50);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("objective gradients at 16 kHz through the resampler") {
  const SampleBuffer clean = testing::synthetic_speech(9, 0.9);
  const SampleBuffer est = dsp::mix_at_snr(clean, testing::street_noise(10, 2.0), 0.0, 3).mixture;
  CHECK(nn::grad_check_objective(nn::Objective::Stoi, 0.0, est, clean).max_relative_error < 1e-4);
  CHECK(nn::grad_check_objective(nn::Objective::Combined, 10.0, est, clean).max_relative_error < 1e-4);
  CHECK(nn::grad_check_objective(nn::Objective::Mse, 0.0, est, clean).max_relative_error < 1e-8);
}

TEST_CASE("grad_check on models") {
  const SampleBuffer clean = testing::synthetic_speech(12, 0.8);
  const SampleBuffer noisy = dsp::mix_at_snr(clean, testing::white_noise(13, 2.0), 0.0, 1).mixture;

  SUBCASE("linear single layer, MSE") {
    nn::FcnModel m = nn::FcnModel::create({1, 1, 9, nn::Activation::Identity}, 2);
    CHECK(nn::grad_check_fcn(m, nn::Objective::Mse, 0.0, noisy, clean).max_relative_error < 1e-8);
  }
  SUBCASE("three tanh layers, combined alpha 1") {
    nn::FcnModel m = nn::FcnModel::create({3, 6, 9, nn::Activation::Tanh}, 3);
    CHECK(nn::grad_check_fcn(m, nn::Objective::Combined, 1.0, noisy, clean).max_relative_error < 1e-4);
  }
  SUBCASE("DDAE, log-spectral MSE") {
    nn::DdaeModel d = nn::DdaeModel::create(512, 256, 2, {16, 16}, 4);
    nn::fit_normalization(d, {{noisy, clean, "x"}});
    CHECK(nn::grad_check_ddae(d, noisy, clean).max_relative_error < 1e-5);
  }
  SUBCASE("epsilon bounds") {
    nn::FcnModel m = nn::FcnModel::identity(3);
    CHECK_THROWS_AS(nn::grad_check_fcn(m, nn::Objective::Mse, 0.0, noisy, clean, {1e-2}), InvalidArgument);
    CHECK_THROWS_AS(nn::grad_check_fcn(m, nn::Objective::Mse, 0.0, noisy, clean, {1e-7}), InvalidArgument);
  }
}

TEST_CASE("training: zero learning rate, determinism, progress") {
  const auto data = toy_pairs(4, 0.9, 300);
  nn::TrainConfig cfg;
  cfg.epochs = 2;
  const nn::FcnModel init = nn::FcnModel::create({3, 4, 9, nn::Activation::Tanh}, 5);

  nn::FcnModel frozen = init;
  cfg.learning_rate = 0.0;
  nn::train(frozen, data, cfg);
  CHECK(nn::encode_model(frozen) == nn::encode_model(init));

  cfg.learning_rate = 3e-3;
  cfg.epochs = 6;
  cfg.batch_size = 2;
  nn::FcnModel a = init, b = init;
  std::vector<double> seen;
  const nn::TrainResult ra = nn::train(a, data, cfg, [&](int, double l) { seen.push_back(l); });
  const nn::TrainResult rb = nn::train(b, data, cfg);
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(seen == ra.epoch_loss);
  CHECK(ra.epoch_loss.size() == 6);
  CHECK(nn::encode_model(a) == nn::encode_model(b));
  CHECK(ra.final_loss < ra.initial_loss);
  CHECK(ra.initial_loss == doctest::Approx(nn::dataset_loss(init, data, cfg)));
  CHECK(ra.final_loss == doctest::Approx(nn::dataset_loss(a, data, cfg)));

  cfg.rng_seed = 7;
  nn::FcnModel c = init;
  CHECK(nn::train(c, data, cfg).epoch_loss != ra.epoch_loss);
}

TEST_CASE("training errors") {
  auto data = toy_pairs(2, 0.9, 400);
  nn::FcnModel m = nn::FcnModel::identity(3);
  nn::TrainConfig cfg;
  CHECK_THROWS_AS(nn::train(m, {}, cfg), InvalidArgument);
  data[0].clean.samples.conservativeResize(100);
  CHECK_THROWS_AS(nn::train(m, data, cfg), InvalidArgument);
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.learning_rate = -1e-3;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);

  // Plain SGD with an absurd step blows the linear output layer up.
  const auto good = toy_pairs(2, 0.9, 401);
  nn::FcnModel big = nn::FcnModel::create({2, 2, 5, nn::Activation::Tanh}, 1);
  nn::TrainConfig wild;
  wild.objective = nn::Objective::Mse;
  wild.optimizer.kind = nn::OptimizerConfig::Kind::Sgd;
  wild.learning_rate = 1e200;
  wild.epochs = 5;
  CHECK_THROWS_AS(nn::train(big, good, wild), NumericError);
}

TEST_CASE("model files") {
  testing::TempDir dir;
  const nn::FcnModel f = nn::FcnModel::create(nn::FcnArchitecture::desk(), 21);
  nn::save_model(f, dir / "f.easm");
  CHECK(nn::peek_model_kind(dir / "f.easm") == nn::ModelKind::Fcn);
  const nn::FcnModel f2 = nn::load_fcn(dir / "f.easm");
  CHECK(nn::encode_model(f2) == nn::encode_model(f));
  CHECK(f2.layers.size() == f.layers.size());
  CHECK(f2.layers[1].weight.values == f.layers[1].weight.values);

  nn::DdaeModel d = nn::DdaeModel::create(256, 128, 1, {8}, 22);
  d.in_mean.setConstant(0.25);
  d.out_std.setConstant(2.0);
  nn::save_model(d, dir / "d.easm");
  CHECK(nn::peek_model_kind(dir / "d.easm") == nn::ModelKind::Ddae);
  const nn::DdaeModel d2 = nn::load_ddae(dir / "d.easm");
  CHECK(nn::encode_model(d2) == nn::encode_model(d));
  CHECK(d2.in_mean == d.in_mean);
  CHECK(d2.frame_len == 256);

  const std::string bytes = nn::encode_model(f);
  CHECK(bytes.substr(0, 4) == "EASM");
  CHECK(bytes[4] == nn::kWeightsFormatVersion);
  CHECK_THROWS_AS(nn::load_ddae(dir / "f.easm"), IoError);
  CHECK_THROWS_AS(nn::decode_fcn(bytes.substr(0, bytes.size() - 3)), IoError);
  CHECK_THROWS_AS(nn::decode_fcn(bytes + "x"), IoError);
  std::string bad = bytes;
  bad[4] = 9;
  CHECK_THROWS_AS(nn::decode_fcn(bad), IoError);
  bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(nn::decode_fcn(bad), IoError);
  CHECK_THROWS_AS(nn::load_fcn(dir / "missing.easm"), IoError);
}

TEST_CASE("DDAE: identity mapping and non-negative magnitudes") {
  nn::DdaeModel d = nn::DdaeModel::create(512, 256, 2, {}, 1);
  auto& out = d.layers.back();
  out.weight.values.setZero();
  out.bias.values.setZero();
  const int bins = d.n_bins();
  for (int k = 0; k < bins; ++k) out.weight.values[static_cast<Eigen::Index>(k) * d.input_dim() + 2 * bins + k] = 1.0;

  const SampleBuffer x = dsp::mix_at_snr(testing::synthetic_speech(3, 1.0), testing::white_noise(4, 2.0), 5.0, 1).mixture;
  const SampleBuffer y = nn::ddae_enhance(d, x);
  CHECK(y.size() == x.size());
  CHECK((y.samples - x.samples).cwiseAbs().maxCoeff() < 1e-6);

  // Very negative predicted log power gives vanishing, never negative, magnitudes.
  d.out_mean.setConstant(-200.0);
  const SampleBuffer quiet = nn::ddae_enhance(d, x);
  CHECK(quiet.samples.allFinite());
  CHECK(quiet.samples.cwiseAbs().maxCoeff() < 1e-20);
  const dsp::Spectrogram s = dsp::stft(x, d.stft_config());
  CHECK(nn::log_power(s).minCoeff() >= std::log(nn::kLogPowerFloor));

  CHECK_THROWS_AS(nn::ddae_enhance(d, SampleBuffer(Eigen::VectorXd(0), 16000)), InvalidArgument);
  CHECK(nn::ddae_enhance(nn::DdaeModel::create_default(1), testing::white_noise(9, 0.07)).size() == 1120);
}

TEST_CASE("context stacking replicates edges") {
  Eigen::MatrixXd f(2, 3);
  f << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd s = nn::stack_context(f, 1);
  REQUIRE(s.rows() == 6);
  CHECK(s.col(0) == (Eigen::VectorXd(6) << 1, 4, 1, 4, 2, 5).finished());
  CHECK(s.col(2) == (Eigen::VectorXd(6) << 2, 5, 3, 6, 3, 6).finished());
}

TEST_CASE("DDAE toy training helps on held-out white noise") {
  // A few dozen utterances only teach the net its training pitches; it needs
  // a few hundred before held-out speech benefits.
  const auto data = toy_pairs(400, 1.2, 500, 50.0);
  nn::DdaeModel d = nn::DdaeModel::create(512, 256, 2, {128, 128}, 6);
  nn::TrainConfig cfg;
  cfg.epochs = 10;
  const nn::TrainResult r = nn::train(d, data, cfg);
  CHECK(r.final_loss < r.initial_loss);

  const auto held = toy_pairs(10, 1.2, 1300, 50.0);
  double noisy = 0.0, enhanced = 0.0;
  for (const auto& p : held) {
    noisy += stoi::stoi(p.clean, p.noisy);
    enhanced += stoi::stoi(p.clean, nn::ddae_enhance(d, p.noisy));
  }
  MESSAGE("held-out STOI noisy " << noisy / 10 << " ddae " << enhanced / 10);
  CHECK(enhanced >= noisy);

  const std::vector<nn::UtterancePair> few(data.begin(), data.begin() + 20);
  cfg.epochs = 2;
  nn::DdaeModel again = nn::DdaeModel::create(512, 256, 2, {32}, 6);
  nn::DdaeModel once = nn::DdaeModel::create(512, 256, 2, {32}, 6);
  CHECK(nn::train(again, few, cfg).epoch_loss == nn::train(once, few, cfg).epoch_loss);
}
