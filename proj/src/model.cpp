#include "msmv/model.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "msmv/error.hpp"
#include "msmv/loss.hpp"

namespace msmv {

using fusion::Slot;
using nn::Vec;

FeatureBundle build_bundle(const PreparedViews& views, const swin::SwinBackbone& seg,
                           const swin::SwinBackbone& crop, BundleCache* cache) {
    if (!views[0] && !views[1]) fail(Errc::NoViews, "exam has neither a CC nor an MLO view");
    const int d = seg.config().feature_dim;
    if (crop.config().feature_dim != d) fail(Errc::ConfigMismatch, "backbones disagree on feature_dim");

    FeatureBundle bundle;
    for (View v : kViews) {
        const auto& planes = views[static_cast<int>(v)];
        const auto s = fusion::seg_slot(v);
        const auto c = fusion::crop_slot(v);
        bundle.present[static_cast<int>(v)] = planes.has_value();
        if (!planes) {
            bundle[s] = Vec::Zero(d);
            bundle[c] = Vec::Zero(d);
            continue;
        }
        swin::SwinBackbone::Cache* sc = nullptr;
        swin::SwinBackbone::Cache* cc = nullptr;
        if (cache) {
            sc = &(*cache)[static_cast<int>(s)].emplace();
            cc = &(*cache)[static_cast<int>(c)].emplace();
        }
        bundle[s] = seg.forward(planes->masked.pixels, sc);
        bundle[c] = crop.forward(planes->cropped.pixels, cc);
    }
    return bundle;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (std::uint64_t{words[0]} << 32) | words[1];
}

}  // namespace

Model::Model(const swin::BackboneConfig& backbone, const fusion::FusionConfig& fusion, std::uint64_t seed)
    : seg(backbone, derive_seed(seed, 1)), crop(backbone, derive_seed(seed, 2)), head(fusion, derive_seed(seed, 3)) {
    if (fusion.feature_dim != backbone.feature_dim) {
        fail(Errc::ConfigMismatch, "fusion feature_dim " + std::to_string(fusion.feature_dim) +
                                       " differs from backbone feature_dim " + std::to_string(backbone.feature_dim));
    }
}

double Model::forward(const PreparedViews& views, bool training, nn::Rng* dropout_rng) const {
    const FeatureBundle bundle = build_bundle(views, seg, crop);
    return head.forward(std::span(&bundle, 1), training, dropout_rng, nullptr)[0];
}

std::vector<double> Model::predict(std::span<const BreastExam> exams, int workers) const {
    std::vector<FeatureBundle> bundles(exams.size());
    parallel_for(exams.size(), workers, [&](std::size_t i) { bundles[i] = build_bundle(exams[i].views, seg, crop); });
    std::vector<double> out(exams.size());
    for (std::size_t i = 0; i < exams.size(); ++i) {
        out[i] = head.forward(std::span(&bundles[i], 1), false, nullptr, nullptr)[0];
    }
    return out;
}

void Model::set_freezing(int unfrozen_top_stages) {
    seg.set_freezing(unfrozen_top_stages);
    crop.set_freezing(unfrozen_top_stages);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

BatchResult forward_backward(const Model& model, std::span<const BreastExam* const> batch, double label_smoothing,
                             nn::Rng& dropout_rng, ModelGrads& grads, int workers, bool keep_caches) {
    const std::size_t n = batch.size();
    if (n == 0) fail(Errc::EmptyInput, "empty minibatch");

    std::vector<FeatureBundle> bundles(n);
    std::vector<BundleCache> caches(keep_caches ? n : 0);
    parallel_for(n, workers, [&](std::size_t i) {
        bundles[i] = build_bundle(batch[i]->views, model.seg, model.crop, keep_caches ? &caches[i] : nullptr);
    });

    BatchResult result;
    const Vec logits = model.head.forward(bundles, true, &dropout_rng, &result.head_cache);
    Vec dlogits(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits[static_cast<Eigen::Index>(i)];
        result.loss += loss::smoothed_bce(z, batch[i]->label, label_smoothing);
        dlogits[static_cast<Eigen::Index>(i)] =
            loss::smoothed_bce_grad(z, batch[i]->label, label_smoothing) / static_cast<double>(n);
        result.logits.push_back(z);
    }
    result.loss /= static_cast<double>(n);

    const auto dslots = model.head.backward(result.head_cache, dlogits, grads.head);

    std::vector<nn::Grads> seg_parts(n, nn::Grads(model.seg.params()));
    std::vector<nn::Grads> crop_parts(n, nn::Grads(model.crop.params()));
    parallel_for(n, workers, [&](std::size_t i) {
        BundleCache local;
        BundleCache* cache = &local;
        if (keep_caches) {
            cache = &caches[i];
        } else {
            build_bundle(batch[i]->views, model.seg, model.crop, &local);
        }
        for (View v : kViews) {
            if (!batch[i]->present(v)) continue;
            const auto s = static_cast<std::size_t>(fusion::seg_slot(v));
            const auto c = static_cast<std::size_t>(fusion::crop_slot(v));
            model.seg.backward(*(*cache)[s], dslots[i][s], seg_parts[i]);
            model.crop.backward(*(*cache)[c], dslots[i][c], crop_parts[i]);
        }
        if (keep_caches) caches[i] = {};
    });
    for (std::size_t i = 0; i < n; ++i) {
        grads.seg += seg_parts[i];
        grads.crop += crop_parts[i];
    }
    return result;
}

}  // namespace msmv
