#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "msmv/exam.hpp"
#include "msmv/fusion.hpp"
#include "msmv/swin.hpp"

namespace msmv {

using fusion::FeatureBundle;

/// Backbone forward caches for the (up to) four passes of one exam, indexed by fusion::Slot.
using BundleCache = std::array<std::optional<swin::SwinBackbone::Cache>, 4>;

/// Masked planes go through seg, cropped planes through crop; absent views get zero vectors.
/// Throws NoViews.
FeatureBundle build_bundle(const PreparedViews& views, const swin::SwinBackbone& seg,
                           const swin::SwinBackbone& crop, BundleCache* cache = nullptr);

/// Two backbone instances (segmented scale, cropped scale) and the fusion/classification head.
class Model {
public:
    Model() = default;
    /// Each component is initialized from its own stream derived from seed.
    Model(const swin::BackboneConfig& backbone, const fusion::FusionConfig& fusion, std::uint64_t seed);

    swin::SwinBackbone seg;
    swin::SwinBackbone crop;
    fusion::FusionHead head;

    /// Single-exam logit. training enables dropout and batch statistics.
    double forward(const PreparedViews& views, bool training = false, nn::Rng* dropout_rng = nullptr) const;

    /// Inference logits for a batch of exams, evaluated with `workers` threads.
    std::vector<double> predict(std::span<const BreastExam> exams, int workers = 1) const;

    void set_freezing(int unfrozen_top_stages);
};

struct ModelGrads {
    nn::Grads seg;
    nn::Grads crop;
    nn::Grads head;

    ModelGrads() = default;
    explicit ModelGrads(const Model& m) : seg(m.seg.params()), crop(m.crop.params()), head(m.head.params()) {}
};

struct BatchResult {
    double loss = 0.0;  // mean label-smoothed BCE
    std::vector<double> logits;
    fusion::FusionHead::Cache head_cache;
};

/// Training-mode forward and backward over one minibatch; gradients of the mean loss are
/// accumulated into grads. Per-exam backbone gradients are summed in batch order, so the result
/// does not depend on `workers`. When keep_caches is false, backbone activations are recomputed
/// during the backward sweep instead of being held for the whole batch.
BatchResult forward_backward(const Model& model, std::span<const BreastExam* const> batch, double label_smoothing,
                             nn::Rng& dropout_rng, ModelGrads& grads, int workers = 1, bool keep_caches = true);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace msmv
