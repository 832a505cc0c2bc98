#pragma once

#include <filesystem>

#include "sot/image.hpp"

namespace sot {

/// Reads an 8-bit PNG. Gray and RGB are kept as 1 and 3 channels; palette
/// images are expanded to RGB, alpha is dropped and 16-bit samples are
/// reduced to 8 bits. Values map to [0,1] by division by 255.
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG, quantizing each value as round(255 * v).
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace sot
