#include "msmv/swin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msmv/error.hpp"

namespace msmv::swin {

void BackboneConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(Errc::BadConfig, "backbone: " + msg); };
    if (depths.empty()) bad("at least one stage is required");
    if (depths.size() != num_heads.size()) bad("depths and num_heads differ in length");
    if (input_side <= 0 || patch_size <= 0 || window_size <= 0 || embed_dim <= 0) bad("sizes must be positive");
    if (input_side % patch_size != 0) bad("input_side must be divisible by patch_size");
    const int grid = input_side / patch_size;
    const int granule = window_size << (num_stages() - 1);
    if (grid % granule != 0) {
        bad("input_side/patch_size (" + std::to_string(grid) + ") must be divisible by window_size*2^(stages-1) (" +
            std::to_string(granule) + ")");
    }
    for (std::size_t s = 0; s < depths.size(); ++s) {
        if (depths[s] < 1) bad("every stage needs at least one block");
        if (num_heads[s] < 1 || stage_dim(static_cast<int>(s)) % num_heads[s] != 0) {
            bad("stage " + std::to_string(s) + " width must be divisible by its head count");
        }
    }
    if (feature_dim < 1) bad("feature_dim must be at least 1");
    if (!(mlp_ratio > 0.0)) bad("mlp_ratio must be positive");
    if (unfrozen_top_stages < 0 || unfrozen_top_stages > num_stages()) bad("unfrozen_top_stages out of range");
    if (in_channels != 1 && in_channels != 3) bad("in_channels must be 1 or 3");
}

// ---------------------------------------------------------------------------
// window bookkeeping

std::vector<FeatureMap> window_partition(const FeatureMap& map, int window) {
    if (window <= 0 || map.height % window != 0 || map.width % window != 0) {
        fail(Errc::IndivisibleShape, std::to_string(map.height) + "x" + std::to_string(map.width) +
                                         " map is not divisible by window " + std::to_string(window));
    }
    const int nh = map.height / window;
    const int nw = map.width / window;
    std::vector<FeatureMap> out;
    out.reserve(static_cast<std::size_t>(nh) * nw);
    for (int wr = 0; wr < nh; ++wr) {
        for (int wc = 0; wc < nw; ++wc) {
            FeatureMap block{window, window, Mat(window * window, map.channels())};
            for (int i = 0; i < window; ++i) {
                for (int j = 0; j < window; ++j) {
                    block.tokens.row(i * window + j) = map.tokens.row((wr * window + i) * map.width + wc * window + j);
                }
            }
            out.push_back(std::move(block));
        }
    }
    return out;
}

FeatureMap window_reverse(const std::vector<FeatureMap>& windows, int window, int height, int width) {
    if (window <= 0 || height % window != 0 || width % window != 0) {
        fail(Errc::IndivisibleShape, "window_reverse shape is not divisible by the window");
    }
    const int nh = height / window;
    const int nw = width / window;
    if (windows.size() != static_cast<std::size_t>(nh) * nw) {
        fail(Errc::ShapeMismatch, "window count does not match the target shape");
    }
    const int channels = windows.empty() ? 0 : windows.front().channels();
    FeatureMap map{height, width, Mat(height * width, channels)};
    for (int wr = 0; wr < nh; ++wr) {
        for (int wc = 0; wc < nw; ++wc) {
            const FeatureMap& block = windows[static_cast<std::size_t>(wr) * nw + wc];
            for (int i = 0; i < window; ++i) {
                for (int j = 0; j < window; ++j) {
                    map.tokens.row((wr * window + i) * width + wc * window + j) = block.tokens.row(i * window + j);
                }
            }
        }
    }
    return map;
}

FeatureMap cyclic_shift(const FeatureMap& map, int shift) {
    FeatureMap out{map.height, map.width, Mat(map.tokens.rows(), map.tokens.cols())};
    const auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            out.tokens.row(r * map.width + c) =
                map.tokens.row(wrap(r + shift, map.height) * map.width + wrap(c + shift, map.width));
        }
    }
    return out;
}

std::vector<int> window_gather_index(int height, int width, int window, int shift) {
    const int nw = width / window;
    const int t = window * window;
    std::vector<int> idx(static_cast<std::size_t>(height) * width);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int k = static_cast<int>(i) / t;
        const int local = static_cast<int>(i) % t;
        const int sr = (k / nw) * window + local / window;
        const int sc = (k % nw) * window + local % window;
        idx[i] = ((sr + shift) % height) * width + (sc + shift) % width;
    }
    return idx;
}

std::vector<int> shift_region_labels(int height, int width, int window, int shift) {
    const int nw = width / window;
    const int t = window * window;
    const auto region = [&](int v, int n) {
        if (shift == 0) return 0;
        if (v < n - window) return 0;
        if (v < n - shift) return 1;
        return 2;
    };
    std::vector<int> labels(static_cast<std::size_t>(height) * width);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int k = static_cast<int>(i) / t;
        const int local = static_cast<int>(i) % t;
        const int sr = (k / nw) * window + local / window;
        const int sc = (k % nw) * window + local % window;
        labels[i] = region(sr, height) * 3 + region(sc, width);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// window attention

WindowAttention WindowAttention::create(ParamStore& ps, const std::string& prefix, int dim, int heads, int window,
                                        nn::Rng& rng) {
    WindowAttention a;
    a.dim = dim;
    a.heads = heads;
    a.window = window;
    a.qkv = Linear::create(ps, prefix + ".qkv", dim, 3 * dim, true, Linear::Init::TruncNormal002, rng);
    const int span = 2 * window - 1;
    a.rel_bias = ps.add(prefix + ".relative_position_bias_table", Mat::Zero(span * span, heads));
    a.proj = Linear::create(ps, prefix + ".proj", dim, dim, true, Linear::Init::TruncNormal002, rng);

    const int t = window * window;
    a.rel_index.resize(static_cast<std::size_t>(t) * t);
    for (int p = 0; p < t; ++p) {
        for (int q = 0; q < t; ++q) {
            const int dr = p / window - q / window + window - 1;
            const int dc = p % window - q % window + window - 1;
            a.rel_index[static_cast<std::size_t>(p) * t + q] = dr * span + dc;
        }
    }
    return a;
}

Mat WindowAttention::forward(const ParamStore& ps, const Mat& x, int height, int width, int shift,
                             Cache* cache) const {
    if (shift != 0 && shift != window / 2) {
        fail(Errc::BadShift, "shift must be 0 or window/2, got " + std::to_string(shift));
    }
    if (shift != 0 && window < 2) fail(Errc::BadShift, "a shifted window needs window >= 2");
    if (height % window != 0 || width % window != 0) {
        fail(Errc::IndivisibleShape, std::to_string(height) + "x" + std::to_string(width) +
                                         " map is not divisible by window " + std::to_string(window));
    }
    if (x.rows() != static_cast<Eigen::Index>(height) * width || x.cols() != dim) {
        fail(Errc::DimMismatch, "attention input has the wrong shape");
    }

    std::vector<int> gather = window_gather_index(height, width, window, shift);
    std::vector<int> labels = shift_region_labels(height, width, window, shift);

    Mat windowed(x.rows(), dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i) windowed.row(i) = x.row(gather[i]);

    Mat qkv_out = qkv.forward(ps, windowed);
    const int t = window * window;
    const int head_dim = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const int num_windows = static_cast<int>(x.rows()) / t;
    const Mat& table = ps.value(rel_bias);
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    Mat context(x.rows(), dim);
    std::vector<Mat> probs;
    if (cache) probs.reserve(static_cast<std::size_t>(num_windows) * heads);

    Mat scores(t, t);
    for (int k = 0; k < num_windows; ++k) {
        const int base = k * t;
        for (int h = 0; h < heads; ++h) {
            const auto q = qkv_out.block(base, h * head_dim, t, head_dim);
            const auto kk = qkv_out.block(base, dim + h * head_dim, t, head_dim);
            const auto v = qkv_out.block(base, 2 * dim + h * head_dim, t, head_dim);
            scores.noalias() = (q * scale) * kk.transpose();
            for (int p = 0; p < t; ++p) {
                for (int r = 0; r < t; ++r) {
                    if (shift != 0 && labels[base + p] != labels[base + r]) {
                        scores(p, r) = kNegInf;
                    } else {
                        scores(p, r) += table(rel_index[static_cast<std::size_t>(p) * t + r], h);
                    }
                }
                const double mx = scores.row(p).maxCoeff();
                scores.row(p) = (scores.row(p).array() - mx).unaryExpr([](double s) { return std::exp(s); });
                scores.row(p) /= scores.row(p).sum();
            }
            context.block(base, h * head_dim, t, head_dim).noalias() = scores * v;
            if (cache) probs.push_back(scores);
        }
    }

    Mat out_w = proj.forward(ps, context);
    Mat y(x.rows(), dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(gather[i]) = out_w.row(i);

    if (cache) {
        cache->height = height;
        cache->width = width;
        cache->shift = shift;
        cache->gather = std::move(gather);
        cache->labels = std::move(labels);
        cache->windowed = std::move(windowed);
        cache->qkv = std::move(qkv_out);
        cache->probs = std::move(probs);
        cache->context = std::move(context);
    }
    return y;
}

Mat WindowAttention::backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const {
    const Eigen::Index n = dy.rows();
    Mat dy_w(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) dy_w.row(i) = dy.row(cache.gather[i]);

    const Mat dcontext = proj.backward(ps, cache.context, dy_w, grads);

    const int t = window * window;
    const int head_dim = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const int num_windows = static_cast<int>(n) / t;
    Mat& dtable = grads[rel_bias];

    Mat dqkv = Mat::Zero(n, 3 * dim);
    Mat dp(t, t);
    Mat da(t, t);
    for (int k = 0; k < num_windows; ++k) {
        const int base = k * t;
        for (int h = 0; h < heads; ++h) {
            const Mat& p = cache.probs[static_cast<std::size_t>(k) * heads + h];
            const auto q = cache.qkv.block(base, h * head_dim, t, head_dim);
            const auto kk = cache.qkv.block(base, dim + h * head_dim, t, head_dim);
            const auto v = cache.qkv.block(base, 2 * dim + h * head_dim, t, head_dim);
            const auto dout = dcontext.block(base, h * head_dim, t, head_dim);

            dp.noalias() = dout * v.transpose();
            dqkv.block(base, 2 * dim + h * head_dim, t, head_dim).noalias() += p.transpose() * dout;

            const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
            da = p.array() * (dp.array().colwise() - row_dot.array());
            for (int a = 0; a < t; ++a) {
                for (int b = 0; b < t; ++b) dtable(rel_index[static_cast<std::size_t>(a) * t + b], h) += da(a, b);
            }
            dqkv.block(base, h * head_dim, t, head_dim).noalias() += (da * kk) * scale;
            dqkv.block(base, dim + h * head_dim, t, head_dim).noalias() += (da.transpose() * q) * scale;
        }
    }

    const Mat dwindowed = qkv.backward(ps, cache.windowed, dqkv, grads);
    Mat dx(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) dx.row(cache.gather[i]) = dwindowed.row(i);
    return dx;
}

FeatureMap shifted_window_attention(const FeatureMap& map, int shift, const WindowAttention& attn,
                                    const ParamStore& ps, std::vector<Mat>* probs) {
    WindowAttention::Cache cache;
    FeatureMap out{map.height, map.width,
                   attn.forward(ps, map.tokens, map.height, map.width, shift, probs ? &cache : nullptr)};
    if (probs) *probs = std::move(cache.probs);
    return out;
}

// ---------------------------------------------------------------------------
// transformer block

Mat SwinBlock::forward(const ParamStore& ps, const Mat& x, Cache* cache) const {
    const Mat h = norm1.forward(ps, x, cache ? &cache->n1 : nullptr);
    Mat x1 = x + attn.forward(ps, h, height, width, shift, cache ? &cache->attn : nullptr);
    Mat h2 = norm2.forward(ps, x1, cache ? &cache->n2 : nullptr);
    Mat u = fc1.forward(ps, h2);
    Mat g = u.unaryExpr([](double v) { return nn::gelu(v); });
    x1 += fc2.forward(ps, g);
    if (cache) {
        cache->h2 = std::move(h2);
        cache->u = std::move(u);
        cache->g = std::move(g);
    }
    return x1;
}

Mat SwinBlock::backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const {
    Mat dg = fc2.backward(ps, cache.g, dy, grads);
    dg.array() *= cache.u.unaryExpr([](double v) { return nn::gelu_grad(v); }).array();
    const Mat dh2 = fc1.backward(ps, cache.h2, dg, grads);
    Mat dx1 = dy + norm2.backward(ps, cache.n2, dh2, grads);
    const Mat dh = attn.backward(ps, cache.attn, dx1, grads);
    dx1 += norm1.backward(ps, cache.n1, dh, grads);
    return dx1;
}

// ---------------------------------------------------------------------------
// patch merging

PatchMerging PatchMerging::create(ParamStore& ps, const std::string& prefix, int height, int width, int dim,
                                  nn::Rng& rng) {
    PatchMerging m;
    m.height = height;
    m.width = width;
    m.dim = dim;
    m.norm = LayerNorm::create(ps, prefix + ".norm", 4 * dim);
    m.reduction = Linear::create(ps, prefix + ".reduction", 4 * dim, 2 * dim, false, Linear::Init::TruncNormal002, rng);
    return m;
}

namespace {

// Source token of slot `part` (0..3) for output token (r, c).
int merge_source(int r, int c, int part, int width) {
    const int dr = part & 1;
    const int dc = part >> 1;
    return (2 * r + dr) * width + 2 * c + dc;
}

}  // namespace

Mat PatchMerging::forward(const ParamStore& ps, const Mat& x, Cache* cache) const {
    if (height % 2 != 0 || width % 2 != 0) {
        fail(Errc::OddShape, "patch merging needs even sides, got " + std::to_string(height) + "x" +
                                 std::to_string(width));
    }
    const int oh = height / 2;
    const int ow = width / 2;
    Mat merged(oh * ow, 4 * dim);
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            for (int part = 0; part < 4; ++part) {
                merged.block(r * ow + c, part * dim, 1, dim) = x.row(merge_source(r, c, part, width));
            }
        }
    }
    Mat normed = norm.forward(ps, merged, cache ? &cache->ln : nullptr);
    Mat y = reduction.forward(ps, normed);
    if (cache) cache->normed = std::move(normed);
    return y;
}

Mat PatchMerging::backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const {
    const Mat dnormed = reduction.backward(ps, cache.normed, dy, grads);
    const Mat dmerged = norm.backward(ps, cache.ln, dnormed, grads);
    const int ow = width / 2;
    Mat dx(static_cast<Eigen::Index>(height) * width, dim);
    for (int r = 0; r < height / 2; ++r) {
        for (int c = 0; c < ow; ++c) {
            for (int part = 0; part < 4; ++part) {
                dx.row(merge_source(r, c, part, width)) = dmerged.block(r * ow + c, part * dim, 1, dim);
            }
        }
    }
    return dx;
}

FeatureMap patch_merge(const FeatureMap& map, const PatchMerging& merge, const ParamStore& ps) {
    if (map.height % 2 != 0 || map.width % 2 != 0) {
        fail(Errc::OddShape, "patch merging needs even sides, got " + std::to_string(map.height) + "x" +
                                 std::to_string(map.width));
    }
    if (merge.height != map.height || merge.width != map.width || merge.dim != map.channels()) {
        fail(Errc::DimMismatch, "patch merging layer was built for a different map shape");
    }
    return FeatureMap{map.height / 2, map.width / 2, merge.forward(ps, map.tokens, nullptr)};
}

// ---------------------------------------------------------------------------
// patch embedding

Mat PatchEmbed::unfold(const Grid& img) const {
    const int gh = img.rows() / patch;
    const int gw = img.cols() / patch;
    const int per_channel = patch * patch;
    Mat patches(gh * gw, in_channels * per_channel);
    for (int pr = 0; pr < gh; ++pr) {
        for (int pc = 0; pc < gw; ++pc) {
            const int row = pr * gw + pc;
            for (int i = 0; i < patch; ++i) {
                for (int j = 0; j < patch; ++j) {
                    const double v = img(pr * patch + i, pc * patch + j);
                    for (int ch = 0; ch < in_channels; ++ch) patches(row, ch * per_channel + i * patch + j) = v;
                }
            }
        }
    }
    return patches;
}

Mat PatchEmbed::forward(const ParamStore& ps, const Grid& img, Cache* cache) const {
    Mat patches = unfold(img);
    Mat y = norm.forward(ps, proj.forward(ps, patches), cache ? &cache->ln : nullptr);
    if (cache) cache->patches = std::move(patches);
    return y;
}

void PatchEmbed::backward(const ParamStore& ps, const Cache& cache, const Mat& dy, Grads& grads) const {
    const Mat dproj = norm.backward(ps, cache.ln, dy, grads);
    proj.backward(ps, cache.patches, dproj, grads, false);
}

// ---------------------------------------------------------------------------
// backbone

SwinBackbone::SwinBackbone(BackboneConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    nn::Rng rng(seed);

    const int patch_dim = config_.in_channels * config_.patch_size * config_.patch_size;
    embed_.patch = config_.patch_size;
    embed_.in_channels = config_.in_channels;
    embed_.proj = Linear::create(params_, "patch_embed.proj", patch_dim, config_.embed_dim, true,
                                 Linear::Init::FanInUniform, rng);
    embed_.norm = LayerNorm::create(params_, "patch_embed.norm", config_.embed_dim);

    const int stage_count = config_.num_stages();
    stages_.resize(static_cast<std::size_t>(stage_count));
    for (int s = 0; s < stage_count; ++s) {
        const int res = config_.stage_resolution(s);
        const int dim = config_.stage_dim(s);
        const int window = std::min(config_.window_size, res);
        const int shift_size = res <= config_.window_size ? 0 : config_.window_size / 2;
        const int hidden = static_cast<int>(std::lround(dim * config_.mlp_ratio));
        Stage& stage = stages_[static_cast<std::size_t>(s)];
        for (int b = 0; b < config_.depths[static_cast<std::size_t>(s)]; ++b) {
            const std::string prefix = "stages." + std::to_string(s) + ".blocks." + std::to_string(b);
            SwinBlock block;
            block.height = res;
            block.width = res;
            block.shift = b % 2 == 1 ? shift_size : 0;
            block.norm1 = LayerNorm::create(params_, prefix + ".norm1", dim);
            block.attn = WindowAttention::create(params_, prefix + ".attn", dim,
                                                 config_.num_heads[static_cast<std::size_t>(s)], window, rng);
            block.norm2 = LayerNorm::create(params_, prefix + ".norm2", dim);
            block.fc1 = Linear::create(params_, prefix + ".mlp.fc1", dim, hidden, true, Linear::Init::TruncNormal002, rng);
            block.fc2 = Linear::create(params_, prefix + ".mlp.fc2", hidden, dim, true, Linear::Init::TruncNormal002, rng);
            stage.blocks.push_back(std::move(block));
        }
        if (s + 1 < stage_count) {
            stage.has_merge = true;
            stage.merge = PatchMerging::create(params_, "stages." + std::to_string(s) + ".merge", res, res, dim, rng);
        }
    }
    const int last_dim = config_.stage_dim(stage_count - 1);
    head_norm_ = LayerNorm::create(params_, "head.norm", last_dim);
    head_proj_ = Linear::create(params_, "head.proj", last_dim, config_.feature_dim, true,
                                Linear::Init::TruncNormal002, rng);
    set_freezing(config_.unfrozen_top_stages);
}

Vec SwinBackbone::forward(const Grid& plane, Cache* cache) const {
    if (plane.rows() != config_.input_side || plane.cols() != config_.input_side) {
        fail(Errc::ConfigMismatch, "plane is " + std::to_string(plane.rows()) + "x" + std::to_string(plane.cols()) +
                                       ", backbone expects side " + std::to_string(config_.input_side));
    }
    if (cache) {
        cache->blocks.assign(stages_.size(), {});
        cache->merges.assign(stages_.size(), {});
    }
    Mat x = embed_.forward(params_, plane, cache ? &cache->embed : nullptr);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const Stage& stage = stages_[s];
        if (cache) cache->blocks[s].resize(stage.blocks.size());
        for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
            x = stage.blocks[b].forward(params_, x, cache ? &cache->blocks[s][b] : nullptr);
        }
        if (stage.has_merge) x = stage.merge.forward(params_, x, cache ? &cache->merges[s] : nullptr);
    }
    const Mat h = head_norm_.forward(params_, x, cache ? &cache->head_norm : nullptr);
    Mat pooled = h.colwise().mean();
    const Mat feat = head_proj_.forward(params_, pooled);
    if (cache) {
        cache->tokens = static_cast<int>(h.rows());
        cache->pooled = std::move(pooled);
    }
    return feat.row(0).transpose();
}

void SwinBackbone::backward(const Cache& cache, const Vec& dfeat, Grads& grads) const {
    if (dfeat.size() != config_.feature_dim) fail(Errc::DimMismatch, "feature cotangent has the wrong length");

    int lowest = config_.num_stages() + 1;
    for (const auto& p : params_) {
        if (p.trainable()) lowest = std::min(lowest, group_of(p.name));
    }
    if (lowest > config_.num_stages()) return;

    const Mat dpooled = head_proj_.backward(params_, cache.pooled, dfeat.transpose(), grads);
    const Mat dh = dpooled.replicate(cache.tokens, 1) / static_cast<double>(cache.tokens);
    Mat dx = head_norm_.backward(params_, cache.head_norm, dh, grads);

    for (int s = config_.num_stages() - 1; s >= 0; --s) {
        if (lowest > s) return;
        const Stage& stage = stages_[static_cast<std::size_t>(s)];
        if (stage.has_merge) dx = stage.merge.backward(params_, cache.merges[static_cast<std::size_t>(s)], dx, grads);
        for (std::size_t b = stage.blocks.size(); b-- > 0;) {
            dx = stage.blocks[b].backward(params_, cache.blocks[static_cast<std::size_t>(s)][b], dx, grads);
        }
    }
    if (lowest < 0) embed_.backward(params_, cache.embed, dx, grads);
}

int SwinBackbone::group_of(const std::string& name) const {
    if (name.starts_with("patch_embed.")) return -1;
    if (name.starts_with("head.")) return config_.num_stages();
    if (name.starts_with("stages.")) {
        const std::size_t dot = name.find('.', 7);
        return std::stoi(name.substr(7, dot - 7));
    }
    fail(Errc::BadConfig, "parameter " + name + " belongs to no backbone group");
}

void SwinBackbone::set_freezing(int unfrozen_top_stages) {
    const int stage_count = config_.num_stages();
    if (unfrozen_top_stages < 0 || unfrozen_top_stages > stage_count) {
        fail(Errc::BadConfig, "unfrozen_top_stages must lie in [0, " + std::to_string(stage_count) + "]");
    }
    config_.unfrozen_top_stages = unfrozen_top_stages;
    const int first_trainable = stage_count - unfrozen_top_stages;
    for (auto& p : params_) {
        const int g = group_of(p.name);
        p.frozen = g == -1 ? unfrozen_top_stages < stage_count : g < first_trainable;
    }
}

std::vector<std::string> SwinBackbone::frozen_set() const {
    std::vector<std::string> names;
    for (const auto& p : params_) {
        if (p.frozen) names.push_back(p.name);
    }
    return names;
}

}  // namespace msmv::swin
