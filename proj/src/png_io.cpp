#include "msmv/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "msmv/error.hpp"

namespace msmv::io {

namespace {

struct ImageGuard {
    png_image image;
    ImageGuard() {
        std::memset(&image, 0, sizeof image);
        image.version = PNG_IMAGE_VERSION;
    }
    ~ImageGuard() { png_image_free(&image); }
    ImageGuard(const ImageGuard&) = delete;
    ImageGuard& operator=(const ImageGuard&) = delete;
};

// The simplified API reports 16-bit sources through the LINEAR flag of the native format.
bool source_is_16_bit(const png_image& image) { return (image.format & PNG_FORMAT_FLAG_LINEAR) != 0; }

}  // namespace

Grid read_png(const std::filesystem::path& path) {
    ImageGuard g;
    if (!png_image_begin_read_from_file(&g.image, path.c_str())) {
        fail(Errc::UnreadableImage, path.string() + ": " + g.image.message);
    }
    const int rows = static_cast<int>(g.image.height);
    const int cols = static_cast<int>(g.image.width);
    Grid out(rows, cols);
    if (source_is_16_bit(g.image)) {
        g.image.format = PNG_FORMAT_LINEAR_Y;
        std::vector<std::uint16_t> buf(static_cast<std::size_t>(rows) * cols);
        if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
            fail(Errc::UnreadableImage, path.string() + ": " + g.image.message);
        }
        for (std::size_t i = 0; i < buf.size(); ++i) out.data()[i] = buf[i] / 65535.0;
    } else {
        g.image.format = PNG_FORMAT_GRAY;
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(rows) * cols);
        if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
            fail(Errc::UnreadableImage, path.string() + ": " + g.image.message);
        }
        for (std::size_t i = 0; i < buf.size(); ++i) out.data()[i] = buf[i] / 255.0;
    }
    return out;
}

std::optional<std::pair<int, int>> png_dimensions(const std::filesystem::path& path) {
    ImageGuard g;
    if (!png_image_begin_read_from_file(&g.image, path.c_str())) return std::nullopt;
    return std::make_pair(static_cast<int>(g.image.height), static_cast<int>(g.image.width));
}

void write_png(const std::filesystem::path& path, const Grid& grid, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) fail(Errc::Io, "PNG bit depth must be 8 or 16");
    if (grid.empty()) fail(Errc::Io, "refusing to write an empty image to " + path.string());
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(grid.cols());
    g.image.height = static_cast<png_uint_32>(grid.rows());
    int ok = 0;
    if (bit_depth == 16) {
        g.image.format = PNG_FORMAT_LINEAR_Y;
        std::vector<std::uint16_t> buf(grid.size());
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] = static_cast<std::uint16_t>(std::lround(std::clamp(grid.data()[i], 0.0, 1.0) * 65535.0));
        }
        ok = png_image_write_to_file(&g.image, path.c_str(), 0, buf.data(), 0, nullptr);
    } else {
        g.image.format = PNG_FORMAT_GRAY;
        std::vector<std::uint8_t> buf(grid.size());
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] = static_cast<std::uint8_t>(std::lround(std::clamp(grid.data()[i], 0.0, 1.0) * 255.0));
        }
        ok = png_image_write_to_file(&g.image, path.c_str(), 0, buf.data(), 0, nullptr);
    }
    if (!ok) fail(Errc::Io, path.string() + ": " + g.image.message);
}

}  // namespace msmv::io
