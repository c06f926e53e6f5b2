#include "msmv/augment.hpp"

#include "msmv/error.hpp"

namespace msmv::augment {

Grid apply_augment(const Grid& grid, AugmentOp op) {
    if (grid.rows() != grid.cols()) {
        fail(Errc::NonSquareInput, "augmentation requires a square plane, got " + std::to_string(grid.rows()) +
                                       "x" + std::to_string(grid.cols()));
    }
    const int n = grid.rows();
    if (op == AugmentOp::Identity) return grid;
    Grid out(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double v = 0.0;
            switch (op) {
                case AugmentOp::Identity: v = grid(r, c); break;
                case AugmentOp::Rot90: v = grid(n - 1 - c, r); break;
                case AugmentOp::Rot180: v = grid(n - 1 - r, n - 1 - c); break;
                case AugmentOp::Rot270: v = grid(c, n - 1 - r); break;
                case AugmentOp::FlipH: v = grid(r, n - 1 - c); break;
                case AugmentOp::FlipV: v = grid(n - 1 - r, c); break;
            }
            out(r, c) = v;
        }
    }
    return out;
}

ImagePlane apply_augment(const ImagePlane& plane, AugmentOp op) {
    ImagePlane out;
    out.pixels = apply_augment(plane.pixels, op);
    out.view = plane.view;
    out.scale = plane.scale;
    out.applied = op;
    return out;
}

PreparedViews apply_augment(const PreparedViews& views, AugmentOp op) {
    PreparedViews out;
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (!views[v]) continue;
        out[v] = ViewPlanes{apply_augment(views[v]->masked, op), apply_augment(views[v]->cropped, op)};
    }
    return out;
}

}  // namespace msmv::augment

#include "msmv/exam.hpp"

namespace msmv::augment {

BreastExam augment_exam(const BreastExam& exam, AugmentOp op) {
    BreastExam out;
    out.breast_id = exam.breast_id;
    out.patient_id = exam.patient_id;
    out.label = exam.label;
    out.views = apply_augment(exam.views, op);
    out.augment = op;
    return out;
}

std::vector<BreastExam> augment_exam(const BreastExam& exam) {
    std::vector<BreastExam> out;
    out.reserve(kAugmentOps.size());
    for (AugmentOp op : kAugmentOps) out.push_back(augment_exam(exam, op));
    return out;
}

}  // namespace msmv::augment
