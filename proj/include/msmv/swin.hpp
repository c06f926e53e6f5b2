#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msmv/grid.hpp"
#include "msmv/nn.hpp"
#include "msmv/plane.hpp"

namespace msmv::swin {

using nn::Grads;
using nn::LayerNorm;
using nn::LayerNormCache;
using nn::Linear;
using nn::Mat;
using nn::ParamStore;
using nn::Vec;

struct BackboneConfig {
    int input_side = 224;
    int patch_size = 4;
    int embed_dim = 24;
    std::vector<int> depths{2, 2};
    std::vector<int> num_heads{3, 6};
    int window_size = 7;
    int feature_dim = 1024;
    double mlp_ratio = 4.0;
    int unfrozen_top_stages = 1;
    /// 1 for grayscale; 3 replicates the plane for externally pretrained weights.
    int in_channels = 1;

    /// Throws BadConfig.
    void validate() const;

    [[nodiscard]] int num_stages() const noexcept { return static_cast<int>(depths.size()); }
    [[nodiscard]] int stage_dim(int s) const noexcept { return embed_dim << s; }
    [[nodiscard]] int stage_resolution(int s) const noexcept { return (input_side / patch_size) >> s; }

    friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// H x W x C map stored as (H*W) x C tokens in row-major spatial order.
struct FeatureMap {
    int height = 0;
    int width = 0;
    Mat tokens;

    [[nodiscard]] int channels() const noexcept { return static_cast<int>(tokens.cols()); }
};

/// Windows in row-major window order; each is window x window x C. Throws IndivisibleShape.
std::vector<FeatureMap> window_partition(const FeatureMap& map, int window);
FeatureMap window_reverse(const std::vector<FeatureMap>& windows, int window, int height, int width);

/// out(r, c) = in((r + shift) mod H, (c + shift) mod W); a negative shift undoes it.
FeatureMap cyclic_shift(const FeatureMap& map, int shift);

/// For each token in shifted-window order, the index of the source token in the unshifted map.
std::vector<int> window_gather_index(int height, int width, int window, int shift);

/// Region label of each token in shifted-window order. Tokens of one window with different
/// labels came from opposite image borders and must not attend to each other.
std::vector<int> shift_region_labels(int height, int width, int window, int shift);

/// Multi-head self-attention inside (optionally cyclically shifted) windows with a learned
/// relative-position bias table of shape (2w-1)^2 x heads.
struct WindowAttention {
    Linear qkv;
    Linear proj;
    std::size_t rel_bias = 0;
    int dim = 0;
    int heads = 0;
    int window = 0;
    std::vector<int> rel_index;

    struct Cache {
        int height = 0;
        int width = 0;
        int shift = 0;
        std::vector<int> gather;
        std::vector<int> labels;
        Mat windowed;
        Mat qkv;
        std::vector<Mat> probs;  // window-major, head-minor; each window^2 x window^2
        Mat context;
    };

    static WindowAttention create(ParamStore& ps, const std::string& prefix, int dim, int heads, int window,
                                  nn::Rng& rng);

    /// x: (H*W) x dim in spatial order. Throws BadShift, IndivisibleShape.
    Mat forward(const ParamStore& ps, const Mat& x, int height, int width, int shift, Cache* cache) const;
    Mat backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const;
};

/// Single-call form of WindowAttention::forward; probs, when given, receives the attention rows.
FeatureMap shifted_window_attention(const FeatureMap& map, int shift, const WindowAttention& attn,
                                    const ParamStore& ps, std::vector<Mat>* probs = nullptr);

/// Pre-norm transformer block: x + attn(LN(x)), then x + MLP(LN(x)).
struct SwinBlock {
    LayerNorm norm1;
    WindowAttention attn;
    LayerNorm norm2;
    Linear fc1;
    Linear fc2;
    int shift = 0;
    int height = 0;
    int width = 0;

    struct Cache {
        LayerNormCache n1;
        WindowAttention::Cache attn;
        LayerNormCache n2;
        Mat h2;
        Mat u;
        Mat g;
    };

    Mat forward(const ParamStore& ps, const Mat& x, Cache* cache) const;
    Mat backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const;
};

/// Concatenates each 2x2 neighbourhood (order (0,0),(1,0),(0,1),(1,1)), normalizes, and reduces 4C -> 2C.
struct PatchMerging {
    LayerNorm norm;
    Linear reduction;
    int height = 0;
    int width = 0;
    int dim = 0;

    struct Cache {
        LayerNormCache ln;
        Mat normed;
    };

    static PatchMerging create(ParamStore& ps, const std::string& prefix, int height, int width, int dim,
                               nn::Rng& rng);

    Mat forward(const ParamStore& ps, const Mat& x, Cache* cache) const;
    Mat backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const;
};

/// Throws OddShape for odd height or width.
FeatureMap patch_merge(const FeatureMap& map, const PatchMerging& merge, const ParamStore& ps);

struct PatchEmbed {
    Linear proj;
    LayerNorm norm;
    int patch = 0;
    int in_channels = 1;

    struct Cache {
        Mat patches;
        LayerNormCache ln;
    };

    Mat unfold(const Grid& img) const;
    Mat forward(const ParamStore& ps, const Grid& img, Cache* cache) const;
    void backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const;
};

struct Stage {
    std::vector<SwinBlock> blocks;
    bool has_merge = false;
    PatchMerging merge;
};

/// Hierarchical windowed-attention feature extractor: patch embedding, stages of alternating
/// regular/shifted window blocks with patch merging between stages, final norm, global average
/// pool and a linear projection to feature_dim.
///
/// Parameter names: "patch_embed.*", "stages.<s>.blocks.<b>.*", "stages.<s>.merge.*" (the merge
/// that follows stage s), "head.norm.*", "head.proj.*".
class SwinBackbone {
public:
    SwinBackbone() = default;
    SwinBackbone(BackboneConfig config, std::uint64_t seed);

    struct Cache {
        PatchEmbed::Cache embed;
        std::vector<std::vector<SwinBlock::Cache>> blocks;
        std::vector<PatchMerging::Cache> merges;
        LayerNormCache head_norm;
        int tokens = 0;
        Mat pooled;
    };

    [[nodiscard]] const BackboneConfig& config() const noexcept { return config_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Throws ConfigMismatch when the plane side differs from input_side.
    Vec forward(const Grid& plane, Cache* cache) const;
    Vec extract_features(const ImagePlane& plane) const { return forward(plane.pixels, nullptr); }

    /// Accumulates gradients of the features' cotangent dfeat. Backpropagation stops below the
    /// lowest stage that holds a trainable parameter.
    void backward(const Cache& cache, const Vec& dfeat, Grads& grads) const;

    /// Trainable: the last `unfrozen_top_stages` stages and head.*; everything else frozen.
    void set_freezing(int unfrozen_top_stages);
    [[nodiscard]] std::vector<std::string> frozen_set() const;

    /// -1 for patch_embed, s for stage s, num_stages() for head.
    [[nodiscard]] int group_of(const std::string& name) const;

    const PatchEmbed& patch_embed() const noexcept { return embed_; }
    const std::vector<Stage>& stages() const noexcept { return stages_; }

private:
    BackboneConfig config_;
    ParamStore params_;
    PatchEmbed embed_;
    std::vector<Stage> stages_;
    LayerNorm head_norm_;
    Linear head_proj_;
};

}  // namespace msmv::swin
