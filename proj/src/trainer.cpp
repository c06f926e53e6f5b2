#include "msmv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "msmv/error.hpp"
#include "msmv/loss.hpp"
#include "msmv/metrics.hpp"
#include "msmv/optimizer.hpp"

namespace msmv::train {

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) fail(Errc::BadConfig, "train.lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        fail(Errc::BadConfig, "train.beta1 and train.beta2 must lie in [0,1)");
    }
    if (!(eps > 0.0)) fail(Errc::BadConfig, "train.eps must be positive");
    if (!(weight_decay >= 0.0)) fail(Errc::BadConfig, "train.weight_decay must be non-negative");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) {
        fail(Errc::BadEpsilon, "train.label_smoothing must lie in [0,0.5)");
    }
    if (batch_size < 1) fail(Errc::BadConfig, "train.batch_size must be at least 1");
    if (epochs < 1) fail(Errc::BadConfig, "train.epochs must be at least 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) fail(Errc::BadConfig, "train.val_fraction must lie in [0,1)");
    if (workers < 1) fail(Errc::BadConfig, "train.workers must be at least 1");
}

std::pair<std::vector<BreastExam>, std::vector<BreastExam>> split_train_val(const std::vector<BreastExam>& exams,
                                                                            double val_fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<bool> is_val(exams.size(), false);
    for (int label = 0; label <= 1; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < exams.size(); ++i) {
            if (exams[i].label == label) idx.push_back(i);
        }
        if (idx.size() < 2 || val_fraction <= 0.0) continue;
        std::shuffle(idx.begin(), idx.end(), rng);
        auto k = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(idx.size())));
        k = std::clamp<std::size_t>(k, 1, idx.size() - 1);
        for (std::size_t j = 0; j < k; ++j) is_val[idx[j]] = true;
    }
    std::pair<std::vector<BreastExam>, std::vector<BreastExam>> out;
    for (std::size_t i = 0; i < exams.size(); ++i) (is_val[i] ? out.second : out.first).push_back(exams[i]);
    return out;
}

ValidationResult validate(const Model& model, const std::vector<BreastExam>& exams, double label_smoothing,
                          int workers) {
    ValidationResult out;
    if (exams.empty()) return out;
    const auto logits = model.predict(exams, workers);
    std::vector<eval::PredictionRecord> recs;
    recs.reserve(exams.size());
    for (std::size_t i = 0; i < exams.size(); ++i) {
        out.loss += loss::smoothed_bce(logits[i], exams[i].label, label_smoothing);
        recs.push_back({exams[i].breast_id, "identity", eval::Cohort::BothViews, exams[i].label, nn::sigmoid(logits[i])});
    }
    out.loss /= static_cast<double>(exams.size());
    const auto c = eval::confusion(recs);
    out.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fn > 0 && c.tn + c.fp > 0) out.auc = eval::auc(recs);
    return out;
}

TrainResult train(Model& model, const std::vector<BreastExam>& train_exams, const std::vector<BreastExam>& val_exams,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    std::vector<const BreastExam*> pool;
    for (const auto& e : train_exams) {
        if (e.both_views()) pool.push_back(&e);
    }
    if (pool.empty()) fail(Errc::EmptyDataset, "no two-view training exams");
    if (cfg.batch_size < 1 || cfg.epochs < 1) fail(Errc::BadConfig, "batch_size and epochs must be at least 1");

    const optim::AdamWConfig opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};
    optim::OptimizerState seg_state(model.seg.params());
    optim::OptimizerState crop_state(model.crop.params());
    optim::OptimizerState head_state(model.head.params());

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), std::uint32_t{0x5eed}};
    std::array<std::uint32_t, 4> words{};
    seq.generate(words.begin(), words.end());
    const std::array<std::uint64_t, 2> streams{(std::uint64_t{words[0]} << 32) | words[1],
                                               (std::uint64_t{words[2]} << 32) | words[3]};
    std::mt19937_64 shuffle_rng(streams[0]);
    nn::Rng dropout_rng(streams[1]);

    struct Sample {
        const BreastExam* exam;
        AugmentOp op;
    };
    std::vector<Sample> samples;
    for (const BreastExam* e : pool) {
        if (cfg.augment) {
            for (AugmentOp op : kAugmentOps) samples.push_back({e, op});
        } else {
            samples.push_back({e, AugmentOp::Identity});
        }
    }

    TrainResult result;
    std::optional<Model> best;
    double best_auc = -std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    ModelGrads grads(model);
    const bool keep_caches = model.seg.config().input_side <= 128;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(samples.begin(), samples.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(samples.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<BreastExam> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) batch.push_back(augment::augment_exam(*samples[i].exam, samples[i].op));
            std::vector<const BreastExam*> ptrs;
            for (const auto& e : batch) ptrs.push_back(&e);

            grads.seg.zero();
            grads.crop.zero();
            grads.head.zero();
            const BatchResult br =
                forward_backward(model, ptrs, cfg.label_smoothing, dropout_rng, grads, cfg.workers, keep_caches);
            optim::adamw_step(model.seg.params(), grads.seg, seg_state, opt);
            optim::adamw_step(model.crop.params(), grads.crop, crop_state, opt);
            optim::adamw_step(model.head.params(), grads.head, head_state, opt);
            model.head.update_running_stats(br.head_cache);
            loss_sum += br.loss * static_cast<double>(batch.size());
            ++result.steps;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(samples.size());
        if (!val_exams.empty()) {
            const ValidationResult v = validate(model, val_exams, cfg.label_smoothing, cfg.workers);
            log.val_loss = v.loss;
            log.val_auc = v.auc;
            log.val_acc = v.accuracy;
            const double auc = v.auc.value_or(-1.0);
            if (auc > best_auc || (auc == best_auc && v.loss < best_loss)) {
                best_auc = auc;
                best_loss = v.loss;
                best = model;
                result.best_epoch = epoch;
            }
        } else {
            result.best_epoch = epoch;
        }
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    if (best) model = std::move(*best);
    return result;
}

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write " + path.string());
    auto cell = [&](const std::optional<double>& v) {
        if (v) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", *v);
            out << buf;
        }
    };
    out << "epoch,train_loss,val_loss,val_auc,val_acc\n";
    for (const auto& e : log) {
        out << e.epoch << ',';
        cell(e.train_loss);
        out << ',';
        cell(e.val_loss);
        out << ',';
        cell(e.val_auc);
        out << ',';
        cell(e.val_acc);
        out << '\n';
    }
}

}  // namespace msmv::train
