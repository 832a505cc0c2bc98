#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sot/pipeline.hpp"

namespace sot {

/// Model container: 8-byte magic "SOTMODEL", a u32 format version, then the
/// config, dictionaries, codes, distributions, cost, plan and loss history.
/// Integers and IEEE-754 doubles are little-endian; matrices are stored as
/// (u64 rows, u64 cols) followed by column-major values.
constexpr std::uint32_t kModelFormatVersion = 1;

std::string encode_model(const TransferModel& model);

/// Throws ParseError (with byte offset) on malformed input and
/// ErrorCode::unsupported_version on a version mismatch.
TransferModel decode_model(const std::string& bytes);

/// Writes through a temporary file and renames, so a failed save leaves no
/// partial file behind.
void save_model(const TransferModel& model, const std::filesystem::path& path);
TransferModel load_model(const std::filesystem::path& path);

}  // namespace sot
