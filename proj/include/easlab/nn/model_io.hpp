#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "easlab/nn/ddae.hpp"
#include "easlab/nn/fcn.hpp"

namespace easlab::nn {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

enum class ModelKind : std::uint32_t { Fcn = 1, Ddae = 2 };

// Layout (little-endian): "EASM", u32 version, u32 kind, architecture
// descriptor, then raw f64 parameters layer by layer.
std::string encode_model(const FcnModel& model);
std::string encode_model(const DdaeModel& model);

ModelKind peek_model_kind(std::string_view bytes);
FcnModel decode_fcn(std::string_view bytes);
DdaeModel decode_ddae(std::string_view bytes);

void save_model(const FcnModel& model, const std::filesystem::path& path);
void save_model(const DdaeModel& model, const std::filesystem::path& path);
ModelKind peek_model_kind(const std::filesystem::path& path);
FcnModel load_fcn(const std::filesystem::path& path);
DdaeModel load_ddae(const std::filesystem::path& path);

}  // namespace easlab::nn
