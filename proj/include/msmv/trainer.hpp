#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "msmv/exam.hpp"
#include "msmv/model.hpp"

namespace msmv::train {

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double label_smoothing = 0.1;
    int batch_size = 16;
    int epochs = 10;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    /// Train on all six augmented variants of every exam.
    bool augment = true;
    /// Evaluate on all six variants of every test exam.
    bool test_augment = true;
    int workers = 1;

    /// Throws BadConfig (lr, betas, batch size, epochs, val_fraction) and BadEpsilon.
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Stratified by label, disjoint by breast_id; order within each part follows the input.
/// Each class with at least two exams contributes round(val_fraction * count) exams, at least one
/// (none when val_fraction is 0).
std::pair<std::vector<BreastExam>, std::vector<BreastExam>> split_train_val(const std::vector<BreastExam>& exams,
                                                                            double val_fraction, std::uint64_t seed);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_auc;
    std::optional<double> val_acc;
};

struct TrainResult {
    std::vector<EpochLog> log;
    /// Epoch whose weights were kept (highest val AUC, then lowest val loss; last epoch without val).
    int best_epoch = 0;
    /// Training steps taken.
    long steps = 0;
};

struct ValidationResult {
    double loss = 0.0;
    std::optional<double> auc;
    double accuracy = 0.0;
};

/// Inference-mode loss/AUC/accuracy over the given exams (no augmentation).
ValidationResult validate(const Model& model, const std::vector<BreastExam>& exams, double label_smoothing,
                          int workers = 1);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Minibatch AdamW on the unfrozen parameters. Exams lacking a view are skipped. The model ends with
/// the weights of the selected epoch. Throws EmptyDataset.
TrainResult train(Model& model, const std::vector<BreastExam>& train_exams, const std::vector<BreastExam>& val_exams,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// CSV with header epoch,train_loss,val_loss,val_auc,val_acc; missing values are empty cells.
void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace msmv::train
