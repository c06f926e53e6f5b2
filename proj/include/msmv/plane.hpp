#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "msmv/grid.hpp"

namespace msmv {

enum class View { CC = 0, MLO = 1 };
enum class Scale { Masked = 0, Cropped = 1 };

/// The six index-permutation transforms used for dataset expansion.
enum class AugmentOp { Identity, Rot90, Rot180, Rot270, FlipH, FlipV };

inline constexpr std::array<View, 2> kViews{View::CC, View::MLO};
inline constexpr std::array<AugmentOp, 6> kAugmentOps{AugmentOp::Identity, AugmentOp::Rot90,
                                                      AugmentOp::Rot180,   AugmentOp::Rot270,
                                                      AugmentOp::FlipH,    AugmentOp::FlipV};

std::string_view to_string(View v) noexcept;
std::string_view to_string(Scale s) noexcept;
std::string_view to_string(AugmentOp op) noexcept;
std::optional<AugmentOp> augment_op_from_string(std::string_view name) noexcept;

/// A square network-input raster with its view/scale tags.
struct ImagePlane {
    Grid pixels;
    View view = View::CC;
    Scale scale = Scale::Masked;
    AugmentOp applied = AugmentOp::Identity;

    [[nodiscard]] int side() const noexcept { return pixels.rows(); }
    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;
};

/// Masked and cropped planes of one view.
struct ViewPlanes {
    ImagePlane masked;
    ImagePlane cropped;
    friend bool operator==(const ViewPlanes&, const ViewPlanes&) = default;
};

/// Per-view planes, indexed by View; an empty slot is an absent view.
using PreparedViews = std::array<std::optional<ViewPlanes>, 2>;

inline int count_present(const PreparedViews& v) noexcept {
    return static_cast<int>(v[0].has_value()) + static_cast<int>(v[1].has_value());
}

}  // namespace msmv
