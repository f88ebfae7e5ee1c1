#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::dsp {

enum class WavEncoding { Pcm16, Float32 };

struct WavWriteOptions {
  WavEncoding encoding = WavEncoding::Pcm16;
  // When false, any |sample| > 1 raises InvalidArgument instead of saturating.
  bool clamp = true;
};

// Reads a mono RIFF/WAVE file, 16-bit PCM or 32-bit IEEE float.
// 16-bit values map to v / 32768.
SampleBuffer load_wav(const std::filesystem::path& path);
SampleBuffer decode_wav(std::string_view bytes);

void save_wav(const SampleBuffer& buffer, const std::filesystem::path& path,
              const WavWriteOptions& options = {});
std::string encode_wav(const SampleBuffer& buffer, const WavWriteOptions& options = {});

}  // namespace easlab::dsp
