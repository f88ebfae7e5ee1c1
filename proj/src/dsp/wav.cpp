#include "easlab/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "easlab/error.hpp"

namespace easlab::dsp {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(std::string_view b, std::size_t at) {
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + at);
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(std::string_view b, std::size_t at) {
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + at);
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

SampleBuffer decode_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw IoError("not a RIFF/WAVE stream");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > bytes.size()) throw IoError("truncated fmt chunk");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40 || body + 26 > bytes.size()) throw IoError("truncated extensible fmt chunk");
        format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError("data chunk before fmt chunk");
      if (channels != 1) {
        throw IoError("only mono WAV is supported, file has " + std::to_string(channels) +
                      " channels");
      }
      if (rate == 0) throw IoError("WAV sample rate is zero");
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      Eigen::VectorXd samples;
      if (format == kFormatPcm && bits == 16) {
        samples.resize(static_cast<Eigen::Index>(avail / 2));
        for (Eigen::Index i = 0; i < samples.size(); ++i) {
          const auto v = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
          samples[i] = v / 32768.0;
        }
      } else if (format == kFormatFloat && bits == 32) {
        samples.resize(static_cast<Eigen::Index>(avail / 4));
        for (Eigen::Index i = 0; i < samples.size(); ++i) {
          const std::uint32_t raw = read_u32(bytes, body + 4 * i);
          float f;
          std::memcpy(&f, &raw, sizeof f);
          samples[i] = f;
        }
      } else {
        throw IoError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)");
      }
      return SampleBuffer(std::move(samples), static_cast<int>(rate));
    }
    pos = body + size + (size & 1u);
  }
  throw IoError("WAV stream has no data chunk");
}

SampleBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const SampleBuffer& buffer, const WavWriteOptions& options) {
  validate(buffer);
  const bool pcm = options.encoding == WavEncoding::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto n = static_cast<std::uint32_t>(buffer.size());
  const std::uint32_t data_size = n * bytes_per_sample;

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_size);

  for (Eigen::Index i = 0; i < buffer.size(); ++i) {
    double x = buffer.samples[i];
    if (std::abs(x) > 1.0) {
      if (!options.clamp) {
        throw InvalidArgument("sample " + std::to_string(i) + " out of range: " +
                              std::to_string(x));
      }
      x = std::clamp(x, -1.0, 1.0);
    }
    if (pcm) {
      const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      const float f = static_cast<float>(x);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    }
  }
  return out;
}

void save_wav(const SampleBuffer& buffer, const std::filesystem::path& path,
              const WavWriteOptions& options) {
  const std::string bytes = encode_wav(buffer, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace easlab::dsp
