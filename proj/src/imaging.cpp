#include "msmv/imaging.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "msmv/error.hpp"

namespace msmv::imaging {

std::string to_string(const BBox& b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d:%d:%d:%d", b.row_min, b.col_min, b.row_max, b.col_max);
    return buf;
}

std::optional<BBox> parse_bbox(const std::string& text) {
    std::array<int, 4> v{};
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
        auto [next, ec] = std::from_chars(p, end, v[i]);
        if (ec != std::errc{}) return std::nullopt;
        p = next;
        if (i < 3) {
            if (p == end || *p != ':') return std::nullopt;
            ++p;
        }
    }
    if (p != end) return std::nullopt;
    BBox b{v[0], v[1], v[2], v[3]};
    if (b.row_min < 0 || b.col_min < 0 || b.row_max < b.row_min || b.col_max < b.col_min) return std::nullopt;
    return b;
}

void RawMammogram::validate() const {
    if (pixels.rows() < 8 || pixels.cols() < 8) {
        fail(Errc::ShapeMismatch, "mammogram " + source_id + " is smaller than 8x8");
    }
    for (double v : pixels.data()) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            fail(Errc::ShapeMismatch, "mammogram " + source_id + " has pixels outside [0,1]");
        }
    }
}

BBox tight_bbox(int rows, int cols, const std::vector<std::uint8_t>& mask) {
    BBox b{rows, cols, -1, -1};
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!mask[static_cast<std::size_t>(r) * cols + c]) continue;
            b.row_min = std::min(b.row_min, r);
            b.col_min = std::min(b.col_min, c);
            b.row_max = std::max(b.row_max, r);
            b.col_max = std::max(b.col_max, c);
        }
    }
    if (b.row_max < 0) fail(Errc::NoForeground, "mask has no true pixels");
    return b;
}

namespace {

int histogram_bin(double v) { return std::clamp(static_cast<int>(v * 256.0), 0, 255); }

}  // namespace

int otsu_threshold_bin(const Grid& img) {
    std::array<double, 256> hist{};
    for (double v : img.data()) hist[histogram_bin(v)] += 1.0;

    const double total = static_cast<double>(img.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

    double weight_bg = 0.0;
    double sum_bg = 0.0;
    double best_var = -1.0;
    int best = 0;
    for (int t = 0; t < 255; ++t) {
        weight_bg += hist[t];
        sum_bg += t * hist[t];
        const double weight_fg = total - weight_bg;
        double between = 0.0;
        if (weight_bg > 0.0 && weight_fg > 0.0) {
            const double mean_bg = sum_bg / weight_bg;
            const double mean_fg = (sum_all - sum_bg) / weight_fg;
            between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
        }
        if (between > best_var) {
            best_var = between;
            best = t;
        }
    }
    return best;
}

std::vector<std::uint8_t> largest_component(int rows, int cols, const std::vector<std::uint8_t>& mask) {
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    std::vector<int> label(n, -1);
    std::vector<std::size_t> stack;
    int best_label = -1;
    std::size_t best_size = 0;
    int next_label = 0;

    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!mask[seed] || label[seed] >= 0) continue;
        const int id = next_label++;
        std::size_t size = 0;
        label[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++size;
            const int r = static_cast<int>(idx / cols);
            const int c = static_cast<int>(idx % cols);
            const std::array<std::array<int, 2>, 4> nbrs{{{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
            for (auto [nr, nc] : nbrs) {
                if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                const std::size_t j = static_cast<std::size_t>(nr) * cols + nc;
                if (mask[j] && label[j] < 0) {
                    label[j] = id;
                    stack.push_back(j);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_label = id;
        }
    }

    std::vector<std::uint8_t> out(n, 0);
    if (best_label < 0) return out;
    for (std::size_t i = 0; i < n; ++i) out[i] = label[i] == best_label ? 1 : 0;
    return out;
}

SegmenterOutput Segmenter::segment(const RawMammogram& img) const {
    img.validate();
    if (backend_ == Backend::External) {
        if (!external_) fail(Errc::BackendUnavailable, "external segmenter requested but not configured");
        SegmenterOutput out = external_(img);
        if (out.rows != img.pixels.rows() || out.cols != img.pixels.cols() ||
            out.mask.size() != img.pixels.size()) {
            fail(Errc::ShapeMismatch, "external segmenter returned a mask of the wrong shape");
        }
        out.bbox = tight_bbox(out.rows, out.cols, out.mask);
        return out;
    }

    const Grid& px = img.pixels;
    const int threshold = otsu_threshold_bin(px);
    std::vector<std::uint8_t> fg(px.size());
    bool any = false;
    for (std::size_t i = 0; i < px.size(); ++i) {
        fg[i] = histogram_bin(px.data()[i]) > threshold ? 1 : 0;
        any = any || fg[i];
    }
    if (!any) fail(Errc::NoForeground, "thresholded image " + img.source_id + " has no foreground");

    SegmenterOutput out;
    out.rows = px.rows();
    out.cols = px.cols();
    out.mask = largest_component(out.rows, out.cols, fg);
    out.bbox = tight_bbox(out.rows, out.cols, out.mask);
    return out;
}

Grid apply_mask_and_crop(const RawMammogram& img, const SegmenterOutput& seg) {
    if (seg.rows != img.pixels.rows() || seg.cols != img.pixels.cols() || seg.mask.size() != img.pixels.size()) {
        fail(Errc::ShapeMismatch, "segmentation mask does not match image " + img.source_id);
    }
    const BBox& b = seg.bbox;
    if (b.row_min < 0 || b.col_min < 0 || b.row_max >= seg.rows || b.col_max >= seg.cols ||
        b.row_max < b.row_min || b.col_max < b.col_min) {
        fail(Errc::ShapeMismatch, "segmentation box outside image " + img.source_id);
    }
    Grid out(b.height(), b.width());
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) {
            const int sr = b.row_min + r;
            const int sc = b.col_min + c;
            out(r, c) = seg.at(sr, sc) ? img.pixels(sr, sc) : 0.0;
        }
    }
    return out;
}

Grid crop_roi(const RawMammogram& img, const BBox& roi) {
    if (roi.row_min < 0 || roi.col_min < 0 || roi.row_max >= img.pixels.rows() ||
        roi.col_max >= img.pixels.cols() || roi.row_max < roi.row_min || roi.col_max < roi.col_min) {
        fail(Errc::RoiOutOfBounds, "roi " + to_string(roi) + " outside " + std::to_string(img.pixels.rows()) +
                                       "x" + std::to_string(img.pixels.cols()) + " image " + img.source_id);
    }
    Grid out(roi.height(), roi.width());
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) out(r, c) = img.pixels(roi.row_min + r, roi.col_min + c);
    }
    return out;
}

namespace {

// Source coordinate for output index i under corner alignment. Exact for i == 0 and i == side - 1.
double source_coord(int i, int in, int side) {
    if (in == 1) return 0.0;
    return static_cast<double>(i) * (in - 1) / (side - 1);
}

}  // namespace

ImagePlane resize_to_input(const Grid& grid, int side, View view, Scale scale) {
    if (grid.empty()) fail(Errc::EmptyInput, "cannot resize an empty grid");
    if (side < 2) fail(Errc::ShapeMismatch, "resize target side must be at least 2");

    ImagePlane plane;
    plane.view = view;
    plane.scale = scale;
    plane.pixels = Grid(side, side);
    if (grid.rows() == side && grid.cols() == side) {
        plane.pixels = grid;
    } else {
        for (int r = 0; r < side; ++r) {
            const double y = source_coord(r, grid.rows(), side);
            const int y0 = std::min(static_cast<int>(std::floor(y)), grid.rows() - 1);
            const int y1 = std::min(y0 + 1, grid.rows() - 1);
            const double fy = y - y0;
            for (int c = 0; c < side; ++c) {
                const double x = source_coord(c, grid.cols(), side);
                const int x0 = std::min(static_cast<int>(std::floor(x)), grid.cols() - 1);
                const int x1 = std::min(x0 + 1, grid.cols() - 1);
                const double fx = x - x0;
                const double top = grid(y0, x0) * (1.0 - fx) + grid(y0, x1) * fx;
                const double bottom = grid(y1, x0) * (1.0 - fx) + grid(y1, x1) * fx;
                plane.pixels(r, c) = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    for (double& v : plane.pixels.data()) v = std::clamp(v, 0.0, 1.0);
    return plane;
}

PreparedViews preprocess_exam(const RawExamViews& views, const Segmenter& segmenter, int side) {
    if (!views[0] && !views[1]) fail(Errc::NoViews, "exam has neither a CC nor an MLO view");
    if (side < 8) fail(Errc::ShapeMismatch, "input side must be at least 8");
    PreparedViews out;
    for (View v : kViews) {
        const auto& raw = views[static_cast<int>(v)];
        if (!raw) continue;
        RawMammogram img = raw->image;
        img.view = v;
        const SegmenterOutput seg = segmenter.segment(img);
        ViewPlanes planes;
        planes.masked = resize_to_input(apply_mask_and_crop(img, seg), side, v, Scale::Masked);
        planes.cropped = resize_to_input(crop_roi(img, raw->roi), side, v, Scale::Cropped);
        out[static_cast<int>(v)] = std::move(planes);
    }
    return out;
}

}  // namespace msmv::imaging
