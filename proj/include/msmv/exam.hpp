#pragma once

#include <string>
#include <vector>

#include "msmv/plane.hpp"

namespace msmv {

/// One breast after preprocessing: up to two views, each with a masked and a cropped plane.
struct BreastExam {
    std::string breast_id;
    std::string patient_id;
    int label = 0;  // 0 benign, 1 malignant
    PreparedViews views;
    AugmentOp augment = AugmentOp::Identity;

    [[nodiscard]] bool present(View v) const noexcept { return views[static_cast<int>(v)].has_value(); }
    [[nodiscard]] bool both_views() const noexcept { return present(View::CC) && present(View::MLO); }
};

namespace augment {

/// Six exams, one per op in kAugmentOps order (Identity first). Labels, ids and presence are copied.
std::vector<BreastExam> augment_exam(const BreastExam& exam);

BreastExam augment_exam(const BreastExam& exam, AugmentOp op);

}  // namespace augment

}  // namespace msmv
