#include "msmv/plane.hpp"

namespace msmv {

std::string_view to_string(View v) noexcept { return v == View::CC ? "CC" : "MLO"; }

std::string_view to_string(Scale s) noexcept { return s == Scale::Masked ? "masked" : "cropped"; }

std::string_view to_string(AugmentOp op) noexcept {
    switch (op) {
        case AugmentOp::Identity: return "identity";
        case AugmentOp::Rot90: return "rot90";
        case AugmentOp::Rot180: return "rot180";
        case AugmentOp::Rot270: return "rot270";
        case AugmentOp::FlipH: return "fliph";
        case AugmentOp::FlipV: return "flipv";
    }
    return "identity";
}

std::optional<AugmentOp> augment_op_from_string(std::string_view name) noexcept {
    for (AugmentOp op : kAugmentOps) {
        if (to_string(op) == name) return op;
    }
    return std::nullopt;
}

}  // namespace msmv
