#pragma once

#include <filesystem>
#include <optional>
#include <utility>

#include "msmv/grid.hpp"

namespace msmv::io {

/// Decodes any PNG to luminance in [0,1]: 16-bit files keep full precision, colour files are
/// converted to gray. Throws UnreadableImage.
Grid read_png(const std::filesystem::path& path);

/// (rows, cols) from the header only; nullopt when the file is missing or not a PNG.
std::optional<std::pair<int, int>> png_dimensions(const std::filesystem::path& path);

/// Grayscale PNG of values clamped to [0,1]; bit_depth is 8 or 16. Throws Io.
void write_png(const std::filesystem::path& path, const Grid& grid, int bit_depth = 16);

}  // namespace msmv::io
