#include "easlab/nn/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "easlab/error.hpp"

namespace easlab::nn {
namespace {

constexpr char kMagic[4] = {'E', 'A', 'S', 'M'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void values(const Eigen::VectorXd& v) {
    for (double x : v) f64(x);
  }
  void header(ModelKind kind) {
    out_.append(kMagic, 4);
    u32(kWeightsFormatVersion);
    u32(static_cast<std::uint32_t>(kind));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void values(Eigen::VectorXd& v) {
    for (double& x : v) {
      x = f64();
      if (!std::isfinite(x)) throw IoError("model file holds a non-finite parameter");
    }
  }
  ModelKind header() {
    need(4);
    if (std::memcmp(bytes_.data(), kMagic, 4) != 0) throw IoError("not an EASM model file");
    pos_ = 4;
    const std::uint32_t version = u32();
    if (version != kWeightsFormatVersion) {
      throw IoError("unsupported model format version " + std::to_string(version));
    }
    const std::uint32_t kind = u32();
    if (kind != 1 && kind != 2) throw IoError("unknown model kind " + std::to_string(kind));
    return static_cast<ModelKind>(kind);
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw IoError("trailing bytes after model parameters");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("model file truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Activation read_activation(Reader& r) {
  const std::uint8_t a = r.u8();
  if (a > 1) throw IoError("unknown activation code " + std::to_string(a));
  return static_cast<Activation>(a);
}

// Guards against absurd descriptors before allocating.
int read_dim(Reader& r, std::uint32_t limit) {
  const std::uint32_t v = r.u32();
  if (v == 0 || v > limit) throw IoError("model dimension out of range: " + std::to_string(v));
  return static_cast<int>(v);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model file " + path.string());
}

}  // namespace

std::string encode_model(const FcnModel& model) {
  model.validate();
  Writer w;
  w.header(ModelKind::Fcn);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const Conv1dLayer& l : model.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_channels));
    w.u32(static_cast<std::uint32_t>(l.out_channels));
    w.u32(static_cast<std::uint32_t>(l.width));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.u8(l.has_bias ? 1 : 0);
  }
  for (const Conv1dLayer& l : model.layers) {
    w.values(l.weight.values);
    if (l.has_bias) w.values(l.bias.values);
  }
  return w.take();
}

std::string encode_model(const DdaeModel& model) {
  model.validate();
  Writer w;
  w.header(ModelKind::Ddae);
  w.u32(static_cast<std::uint32_t>(model.frame_len));
  w.u32(static_cast<std::uint32_t>(model.hop));
  w.u32(static_cast<std::uint32_t>(model.context));
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const DenseLayer& l : model.layers) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
  w.values(model.in_mean);
  w.values(model.in_std);
  w.values(model.out_mean);
  w.values(model.out_std);
  for (const DenseLayer& l : model.layers) {
    w.values(l.weight.values);
    w.values(l.bias.values);
  }
  return w.take();
}

ModelKind peek_model_kind(std::string_view bytes) { return Reader(bytes).header(); }

FcnModel decode_fcn(std::string_view bytes) {
  Reader r(bytes);
  if (r.header() != ModelKind::Fcn) throw IoError("model file does not hold an FCN");
  const int n = read_dim(r, 1024);
  FcnModel model;
  for (int i = 0; i < n; ++i) {
    const int in = read_dim(r, 1 << 12);
    const int out = read_dim(r, 1 << 12);
    const int width = read_dim(r, 1 << 14);
    const Activation act = read_activation(r);
    const std::uint8_t bias = r.u8();
    if (bias > 1) throw IoError("bad bias flag");
    model.layers.push_back(Conv1dLayer::make(in, out, width, act, bias == 1));
  }
  for (Conv1dLayer& l : model.layers) {
    r.values(l.weight.values);
    if (l.has_bias) r.values(l.bias.values);
  }
  r.finish();
  try {
    model.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("inconsistent FCN descriptor: ") + e.what());
  }
  return model;
}

DdaeModel decode_ddae(std::string_view bytes) {
  Reader r(bytes);
  if (r.header() != ModelKind::Ddae) throw IoError("model file does not hold a DDAE");
  DdaeModel model;
  model.frame_len = read_dim(r, 1 << 16);
  model.hop = read_dim(r, 1 << 16);
  const std::uint32_t context = r.u32();
  if (context > 64) throw IoError("DDAE context out of range");
  model.context = static_cast<int>(context);
  const int n = read_dim(r, 1024);
  for (int i = 0; i < n; ++i) {
    const int in = read_dim(r, 1 << 20);
    const int out = read_dim(r, 1 << 16);
    model.layers.push_back(DenseLayer::make(in, out, read_activation(r)));
  }
  if (model.layers.front().in != model.input_dim() || model.layers.back().out != model.n_bins()) {
    throw IoError("inconsistent DDAE descriptor");
  }
  model.in_mean.resize(model.input_dim());
  model.in_std.resize(model.input_dim());
  model.out_mean.resize(model.n_bins());
  model.out_std.resize(model.n_bins());
  r.values(model.in_mean);
  r.values(model.in_std);
  r.values(model.out_mean);
  r.values(model.out_std);
  for (DenseLayer& l : model.layers) {
    r.values(l.weight.values);
    r.values(l.bias.values);
  }
  r.finish();
  try {
    model.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("inconsistent DDAE descriptor: ") + e.what());
  }
  return model;
}

void save_model(const FcnModel& model, const std::filesystem::path& path) {
  write_file(encode_model(model), path);
}
void save_model(const DdaeModel& model, const std::filesystem::path& path) {
  write_file(encode_model(model), path);
}
ModelKind peek_model_kind(const std::filesystem::path& path) { return peek_model_kind(std::string_view(read_file(path))); }
FcnModel load_fcn(const std::filesystem::path& path) { return decode_fcn(read_file(path)); }
DdaeModel load_ddae(const std::filesystem::path& path) { return decode_ddae(read_file(path)); }

}  // namespace easlab::nn
