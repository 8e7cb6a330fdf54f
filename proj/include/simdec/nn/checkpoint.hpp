#pragma once

#include <filesystem>

#include "json.hpp"

#include "simdec/nn/parameter.hpp"

namespace simdec::nn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes `params` as one file: 8-byte magic "SDCKPT01", little-endian u64 header
/// length, a JSON header {format_version, hyper, params:[{name, shape, offset}]},
/// then every value as a little-endian IEEE-754 double.
void save_checkpoint(const std::filesystem::path& path, const ParameterList& params, const nlohmann::json& hyper);

/// Reads only the JSON header.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// Restores values into `params`; names and shapes must match the file exactly.
/// Returns the stored hyperparameter object.
nlohmann::json load_checkpoint(const std::filesystem::path& path, const ParameterList& params);

}  // namespace simdec::nn
