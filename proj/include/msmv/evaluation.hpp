#pragma once

#include <filesystem>
#include <vector>

#include "msmv/exam.hpp"
#include "msmv/metrics.hpp"
#include "msmv/model.hpp"

namespace msmv {

eval::Cohort cohort_of(const BreastExam& exam);

/// One record per exam, or six (one per augmentation) when test_augment is set.
std::vector<eval::PredictionRecord> predict_records(const Model& model, const std::vector<BreastExam>& exams,
                                                    bool test_augment, int workers = 1);

/// Mean score per breast_id, in first-appearance order, tagged augment "mean".
std::vector<eval::PredictionRecord> per_exam_records(const std::vector<eval::PredictionRecord>& records);

/// Header breast_id,augment,cohort,label,score; scores with 17 significant digits.
void write_predictions(const std::filesystem::path& path, const std::vector<eval::PredictionRecord>& records);
/// Throws MalformedReport.
std::vector<eval::PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace msmv
