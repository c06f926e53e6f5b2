#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msmv/nn.hpp"
#include "msmv/plane.hpp"

namespace msmv::fusion {

using nn::Grads;
using nn::Linear;
using nn::Mat;
using nn::ParamStore;
using nn::Vec;

enum class FusionStrategy { MaxPool, Conv };

std::string_view to_string(FusionStrategy s) noexcept;
/// Accepts "maxpool" and "conv". Throws BadConfig.
FusionStrategy strategy_from_string(std::string_view name);

struct FusionConfig {
    FusionStrategy strategy = FusionStrategy::MaxPool;
    int feature_dim = 1024;
    /// First MLP width; a fused vector of another length is first projected to it.
    int width = 1024;
    int hidden = 512;
    double dropout_rate = 0.3;
    double leaky_slope = 0.01;
    int conv_out_channels = 4;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    static constexpr int kConvKernel = 3;
    static constexpr int kConvPadding = 1;
    static constexpr int kPool = 2;

    /// Throws BadConfig.
    void validate() const;

    /// (4/2) * (feature_dim/2) * conv_out_channels.
    [[nodiscard]] int conv_flatten_size() const noexcept { return 2 * (feature_dim / 2) * conv_out_channels; }
    [[nodiscard]] int mlp_input_size() const noexcept {
        return strategy == FusionStrategy::MaxPool ? feature_dim : conv_flatten_size();
    }

    friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// Slot order matches the stacking order of the convolution input rows.
enum class Slot { SegCC = 0, SegMLO = 1, CropCC = 2, CropMLO = 3 };

constexpr Slot seg_slot(View v) noexcept { return v == View::CC ? Slot::SegCC : Slot::SegMLO; }
constexpr Slot crop_slot(View v) noexcept { return v == View::CC ? Slot::CropCC : Slot::CropMLO; }

/// Four feature vectors plus view presence. An absent view has both of its vectors exactly zero.
struct FeatureBundle {
    std::array<Vec, 4> slots;
    std::array<bool, 2> present{false, false};

    Vec& operator[](Slot s) { return slots[static_cast<int>(s)]; }
    const Vec& operator[](Slot s) const { return slots[static_cast<int>(s)]; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(slots[0].size()); }
};

/// out[i] = max over the four slots. Throws DimMismatch when slot lengths differ.
Vec fuse_maxpool(const FeatureBundle& bundle);

/// Convolutional fusion block plus MLP classifier producing a single raw logit.
///
/// Parameters: "conv.weight" (C_out x 9), "conv.bias", "bn.weight", "bn.bias", buffers
/// "bn.running_mean"/"bn.running_var"; "mlp.in.*" (only when the fused length differs from
/// width), "mlp.fc1.*" (width -> hidden), "mlp.out.*" (hidden -> 1).
class FusionHead {
public:
    FusionHead() = default;
    FusionHead(FusionConfig config, std::uint64_t seed);

    struct Cache {
        bool training = false;
        int batch = 0;
        // conv path
        std::vector<Mat> inputs;     // per sample, 4 x D
        std::vector<Mat> conv_out;   // per sample, C_out x (4*D)
        std::vector<Mat> bn_xhat;    // per sample, C_out x (4*D)
        std::vector<Mat> bn_out;     // per sample, after ReLU
        std::vector<std::vector<int>> pool_arg;  // per sample, flat index of each pooled max
        Vec batch_mean;
        Vec batch_var;
        Vec inv_std;
        // max-pool path
        std::vector<std::vector<int>> max_slot;  // per sample, winning slot per feature
        // mlp
        Mat fused;
        Mat a0;
        Mat h;
        Mat dropout_mask;
        Mat dropped;
    };

    [[nodiscard]] const FusionConfig& config() const noexcept { return config_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Fuses a batch per the configured strategy and applies the MLP. In training mode batch
    /// normalization uses batch statistics and dropout draws from dropout_rng.
    Vec forward(std::span<const FeatureBundle> batch, bool training, nn::Rng* dropout_rng, Cache* cache) const;

    /// Accumulates parameter gradients; returns the cotangent of every bundle slot.
    std::vector<std::array<Vec, 4>> backward(const Cache& cache, const Vec& dlogits, Grads& grads) const;

    /// Folds the batch statistics of a training forward into the running estimates.
    void update_running_stats(const Cache& cache);

    /// Convolution block in inference mode for one bundle; length conv_flatten_size().
    Vec fuse_conv(const FeatureBundle& bundle) const;

    /// MLP on a fused vector. Throws DimMismatch.
    double mlp_head(const Vec& fused, bool training, nn::Rng* dropout_rng) const;

    [[nodiscard]] bool has_input_projection() const noexcept { return has_in_; }

private:
    Mat conv_forward(const Mat& input) const;
    Mat mlp_forward(const Mat& fused, bool training, nn::Rng* rng, Cache* cache) const;

    FusionConfig config_;
    ParamStore params_;
    std::size_t conv_w_ = 0, conv_b_ = 0, bn_gamma_ = 0, bn_beta_ = 0, bn_mean_ = 0, bn_var_ = 0;
    bool has_in_ = false;
    Linear in_;
    Linear fc1_;
    Linear out_;
};

}  // namespace msmv::fusion
