#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msmv/grid.hpp"
#include "msmv/plane.hpp"

namespace msmv::imaging {

/// Inclusive pixel box.
struct BBox {
    int row_min = 0;
    int col_min = 0;
    int row_max = 0;
    int col_max = 0;

    [[nodiscard]] int height() const noexcept { return row_max - row_min + 1; }
    [[nodiscard]] int width() const noexcept { return col_max - col_min + 1; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Serialized as "r0:c0:r1:c1".
std::string to_string(const BBox& b);
std::optional<BBox> parse_bbox(const std::string& text);

struct RawMammogram {
    Grid pixels;
    View view = View::CC;
    std::string source_id;

    /// Throws ShapeMismatch for rasters under 8x8 or pixels outside [0,1].
    void validate() const;
};

struct SegmenterOutput {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> mask;
    BBox bbox;

    [[nodiscard]] bool at(int r, int c) const noexcept {
        return mask[static_cast<std::size_t>(r) * cols + c] != 0;
    }
};

/// Tight box around the true pixels of a mask. Throws NoForeground if the mask is empty.
BBox tight_bbox(int rows, int cols, const std::vector<std::uint8_t>& mask);

/// Otsu threshold over a 256-bin histogram of [0,1]. Pixels whose bin index is
/// strictly greater than the returned bin are foreground.
int otsu_threshold_bin(const Grid& img);

/// Largest 4-connected component of a binary mask; ties keep the first in raster order.
std::vector<std::uint8_t> largest_component(int rows, int cols, const std::vector<std::uint8_t>& mask);

using ExternalSegmenter = std::function<SegmenterOutput(const RawMammogram&)>;

class Segmenter {
public:
    enum class Backend { Classical, External };

    static Segmenter classical() { return Segmenter(Backend::Classical, {}); }
    static Segmenter external(ExternalSegmenter fn) { return Segmenter(Backend::External, std::move(fn)); }

    [[nodiscard]] Backend backend() const noexcept { return backend_; }

    /// Global Otsu + largest 4-connected component for Classical; the callback for External.
    /// Throws NoForeground, BackendUnavailable.
    SegmenterOutput segment(const RawMammogram& img) const;

private:
    Segmenter(Backend b, ExternalSegmenter fn) : backend_(b), external_(std::move(fn)) {}

    Backend backend_;
    ExternalSegmenter external_;
};

inline SegmenterOutput segment_lobe(const RawMammogram& img, const Segmenter& backend) {
    return backend.segment(img);
}

/// Background zeroed by the mask, then cropped to the mask's box.
Grid apply_mask_and_crop(const RawMammogram& img, const SegmenterOutput& seg);

/// Unmasked sub-grid under roi. Throws RoiOutOfBounds.
Grid crop_roi(const RawMammogram& img, const BBox& roi);

/// Corner-aligned bilinear resampling to side x side, clamped to [0,1]:
/// output sample i maps to source coordinate i * (in - 1) / (side - 1). Throws EmptyInput,
/// ShapeMismatch (side < 2).
ImagePlane resize_to_input(const Grid& grid, int side, View view = View::CC, Scale scale = Scale::Masked);

/// Raw inputs of one breast: per view, the full image and the ROI box.
struct RawView {
    RawMammogram image;
    BBox roi;
};
using RawExamViews = std::array<std::optional<RawView>, 2>;

/// Emits (masked, cropped) planes for each present view. Throws NoViews, ShapeMismatch (side < 8).
PreparedViews preprocess_exam(const RawExamViews& views, const Segmenter& segmenter, int side = 224);

}  // namespace msmv::imaging
