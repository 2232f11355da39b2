#pragma once

#include <cstdint>
#include <filesystem>

#include "yzr/encoder.hpp"

namespace yzr {

/// Binary container: magic, format version, encoder config, then one
/// checksummed tensor record per parameter tensor.
void save_params(const EncoderParams<float>& params, const std::filesystem::path& path);

/// Throws IoError, ChecksumError (corrupt or truncated), VersionMismatch
/// (format version, or a config that is not the fixed architecture).
EncoderParams<float> load_params(const std::filesystem::path& path);
/// Additionally requires the stored config to equal `expected`.
EncoderParams<float> load_params(const std::filesystem::path& path, const EncoderConfig& expected);

/// Stable 64-bit digest of every tensor's bytes; ties an index to its weights.
std::uint64_t params_fingerprint(const EncoderParams<float>& params);

}  // namespace yzr
