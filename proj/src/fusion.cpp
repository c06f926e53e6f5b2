#include "msmv/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "msmv/error.hpp"

namespace msmv::fusion {

std::string_view to_string(FusionStrategy s) noexcept { return s == FusionStrategy::MaxPool ? "maxpool" : "conv"; }

FusionStrategy strategy_from_string(std::string_view name) {
    if (name == "maxpool") return FusionStrategy::MaxPool;
    if (name == "conv") return FusionStrategy::Conv;
    fail(Errc::BadConfig, "unknown fusion strategy '" + std::string(name) + "' (expected maxpool or conv)");
}

void FusionConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(Errc::BadConfig, "fusion: " + msg); };
    if (feature_dim < 1 || width < 1 || hidden < 1) bad("layer sizes must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout_rate must lie in [0,1)");
    if (!std::isfinite(leaky_slope)) bad("leaky_slope must be finite");
    if (strategy == FusionStrategy::Conv) {
        if (conv_out_channels < 1) bad("conv_out_channels must be positive");
        if (feature_dim % 2 != 0) bad("the convolution path needs an even feature_dim");
    }
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) bad("bn_momentum must lie in (0,1]");
    if (!(bn_eps > 0.0)) bad("bn_eps must be positive");
}

Vec fuse_maxpool(const FeatureBundle& bundle) {
    const Eigen::Index d = bundle.slots[0].size();
    for (const Vec& s : bundle.slots) {
        if (s.size() != d) fail(Errc::DimMismatch, "bundle slots have different lengths");
    }
    Vec out = bundle.slots[0];
    for (int k = 1; k < 4; ++k) out = out.cwiseMax(bundle.slots[static_cast<std::size_t>(k)]);
    return out;
}

FusionHead::FusionHead(FusionConfig config, std::uint64_t seed) : config_(config) {
    config_.validate();
    nn::Rng rng(seed);
    const int c_out = config_.conv_out_channels;
    if (config_.strategy == FusionStrategy::Conv) {
        const double bound = 1.0 / std::sqrt(9.0);
        conv_w_ = params_.add("conv.weight", nn::uniform(c_out, 9, bound, rng));
        conv_b_ = params_.add("conv.bias", nn::uniform(1, c_out, bound, rng));
        bn_gamma_ = params_.add("bn.weight", Mat::Ones(1, c_out));
        bn_beta_ = params_.add("bn.bias", Mat::Zero(1, c_out));
        bn_mean_ = params_.add("bn.running_mean", Mat::Zero(1, c_out), true);
        bn_var_ = params_.add("bn.running_var", Mat::Ones(1, c_out), true);
    }
    const int in = config_.mlp_input_size();
    has_in_ = in != config_.width;
    if (has_in_) in_ = Linear::create(params_, "mlp.in", in, config_.width, true, Linear::Init::FanInUniform, rng);
    fc1_ = Linear::create(params_, "mlp.fc1", config_.width, config_.hidden, true, Linear::Init::FanInUniform, rng);
    out_ = Linear::create(params_, "mlp.out", config_.hidden, 1, true, Linear::Init::FanInUniform, rng);
}

// 3x3, stride 1, zero padding 1, one input channel. Output row o holds channel o over the 4 x D grid.
Mat FusionHead::conv_forward(const Mat& input) const {
    const int rows = static_cast<int>(input.rows());
    const int cols = static_cast<int>(input.cols());
    const Mat& w = params_.value(conv_w_);
    const Mat& b = params_.value(conv_b_);
    Mat out(config_.conv_out_channels, rows * cols);
    for (int o = 0; o < config_.conv_out_channels; ++o) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                double acc = b(0, o);
                for (int i = -1; i <= 1; ++i) {
                    const int rr = r + i;
                    if (rr < 0 || rr >= rows) continue;
                    for (int j = -1; j <= 1; ++j) {
                        const int cc = c + j;
                        if (cc < 0 || cc >= cols) continue;
                        acc += w(o, (i + 1) * 3 + (j + 1)) * input(rr, cc);
                    }
                }
                out(o, r * cols + c) = acc;
            }
        }
    }
    return out;
}

namespace {

Mat stack_slots(const FeatureBundle& b) {
    const int d = b.dim();
    Mat m(4, d);
    for (int k = 0; k < 4; ++k) {
        if (b.slots[static_cast<std::size_t>(k)].size() != d) fail(Errc::DimMismatch, "bundle slots have different lengths");
        m.row(k) = b.slots[static_cast<std::size_t>(k)].transpose();
    }
    return m;
}

}  // namespace

Mat FusionHead::mlp_forward(const Mat& fused, bool training, nn::Rng* rng, Cache* cache) const {
    const int expected = has_in_ ? in_.in : config_.width;
    if (fused.cols() != expected) {
        fail(Errc::DimMismatch, "MLP expects " + std::to_string(expected) + " inputs, got " + std::to_string(fused.cols()));
    }
    Mat a0 = has_in_ ? in_.forward(params_, fused) : fused;
    Mat h = fc1_.forward(params_, a0);
    const double slope = config_.leaky_slope;
    Mat act = h.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });

    Mat mask;
    const double p = config_.dropout_rate;
    if (training && p > 0.0) {
        if (!rng) fail(Errc::BadConfig, "training-mode dropout needs a random stream");
        std::bernoulli_distribution keep(1.0 - p);
        mask.resize(act.rows(), act.cols());
        const double scale = 1.0 / (1.0 - p);
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : 0.0;
        act.array() *= mask.array();
    }
    Mat logits = out_.forward(params_, act);
    if (cache) {
        cache->fused = fused;
        cache->a0 = std::move(a0);
        cache->h = std::move(h);
        cache->dropout_mask = std::move(mask);
        cache->dropped = std::move(act);
    }
    return logits;
}

Vec FusionHead::forward(std::span<const FeatureBundle> batch, bool training, nn::Rng* dropout_rng,
                        Cache* cache) const {
    const int n = static_cast<int>(batch.size());
    if (n == 0) fail(Errc::EmptyInput, "empty batch");
    const int d = config_.feature_dim;
    for (const auto& b : batch) {
        for (const Vec& s : b.slots) {
            if (s.size() != d) {
                fail(Errc::DimMismatch, "bundle vector length " + std::to_string(s.size()) + " != feature_dim " +
                                            std::to_string(d));
            }
        }
    }
    if (cache) {
        *cache = Cache{};
        cache->training = training;
        cache->batch = n;
    }

    Mat fused(n, config_.mlp_input_size());
    if (config_.strategy == FusionStrategy::MaxPool) {
        if (cache) cache->max_slot.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const FeatureBundle& b = batch[static_cast<std::size_t>(i)];
            std::vector<int> arg(static_cast<std::size_t>(d), 0);
            for (int f = 0; f < d; ++f) {
                int best = 0;
                for (int k = 1; k < 4; ++k) {
                    if (b.slots[static_cast<std::size_t>(k)][f] > b.slots[static_cast<std::size_t>(best)][f]) best = k;
                }
                arg[static_cast<std::size_t>(f)] = best;
                fused(i, f) = b.slots[static_cast<std::size_t>(best)][f];
            }
            if (cache) cache->max_slot[static_cast<std::size_t>(i)] = std::move(arg);
        }
    } else {
        const int c_out = config_.conv_out_channels;
        const int plane = 4 * d;
        std::vector<Mat> inputs;
        std::vector<Mat> conv;
        inputs.reserve(static_cast<std::size_t>(n));
        conv.reserve(static_cast<std::size_t>(n));
        for (const auto& b : batch) {
            inputs.push_back(stack_slots(b));
            conv.push_back(conv_forward(inputs.back()));
        }

        Vec mean(c_out);
        Vec var(c_out);
        if (training) {
            const double m = static_cast<double>(n) * plane;
            for (int o = 0; o < c_out; ++o) {
                double s = 0.0;
                for (const Mat& z : conv) s += z.row(o).sum();
                mean[o] = s / m;
                double sq = 0.0;
                for (const Mat& z : conv) sq += (z.row(o).array() - mean[o]).square().sum();
                var[o] = sq / m;
            }
        } else {
            mean = params_.value(bn_mean_).row(0).transpose();
            var = params_.value(bn_var_).row(0).transpose();
        }
        const Vec inv_std = (var.array() + config_.bn_eps).rsqrt();
        const Mat& gamma = params_.value(bn_gamma_);
        const Mat& beta = params_.value(bn_beta_);

        const int half = d / 2;
        for (int i = 0; i < n; ++i) {
            const Mat& z = conv[static_cast<std::size_t>(i)];
            Mat xhat(c_out, plane);
            Mat act(c_out, plane);
            for (int o = 0; o < c_out; ++o) {
                xhat.row(o) = (z.row(o).array() - mean[o]) * inv_std[o];
                act.row(o) = (xhat.row(o).array() * gamma(0, o) + beta(0, o)).max(0.0);
            }
            std::vector<int> arg(static_cast<std::size_t>(c_out) * 2 * half);
            for (int o = 0; o < c_out; ++o) {
                for (int pr = 0; pr < 2; ++pr) {
                    for (int pc = 0; pc < half; ++pc) {
                        int best = (2 * pr) * d + 2 * pc;
                        for (int q = 1; q < 4; ++q) {
                            const int idx = (2 * pr + q / 2) * d + 2 * pc + q % 2;
                            if (act(o, idx) > act(o, best)) best = idx;
                        }
                        const int flat = o * 2 * half + pr * half + pc;
                        fused(i, flat) = act(o, best);
                        arg[static_cast<std::size_t>(flat)] = best;
                    }
                }
            }
            if (cache) {
                cache->bn_xhat.push_back(std::move(xhat));
                cache->bn_out.push_back(std::move(act));
                cache->pool_arg.push_back(std::move(arg));
            }
        }
        if (cache) {
            cache->inputs = std::move(inputs);
            cache->conv_out = std::move(conv);
            cache->batch_mean = mean;
            cache->batch_var = var;
            cache->inv_std = inv_std;
        }
    }

    const Mat logits = mlp_forward(fused, training, dropout_rng, cache);
    return logits.col(0);
}

std::vector<std::array<Vec, 4>> FusionHead::backward(const Cache& cache, const Vec& dlogits, Grads& grads) const {
    const int n = cache.batch;
    if (dlogits.size() != n) fail(Errc::DimMismatch, "logit cotangent does not match the batch");

    Mat dact = out_.backward(params_, cache.dropped, Mat(dlogits), grads);
    if (cache.dropout_mask.size() > 0) dact.array() *= cache.dropout_mask.array();
    const double slope = config_.leaky_slope;
    dact.array() *= cache.h.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }).array();
    Mat dfused = fc1_.backward(params_, cache.a0, dact, grads);
    if (has_in_) dfused = in_.backward(params_, cache.fused, dfused, grads);

    const int d = config_.feature_dim;
    std::vector<std::array<Vec, 4>> dslots(static_cast<std::size_t>(n));
    for (auto& s : dslots) {
        for (Vec& v : s) v = Vec::Zero(d);
    }

    if (config_.strategy == FusionStrategy::MaxPool) {
        for (int i = 0; i < n; ++i) {
            const auto& arg = cache.max_slot[static_cast<std::size_t>(i)];
            for (int f = 0; f < d; ++f) {
                dslots[static_cast<std::size_t>(i)][static_cast<std::size_t>(arg[static_cast<std::size_t>(f)])][f] += dfused(i, f);
            }
        }
        return dslots;
    }

    const int c_out = config_.conv_out_channels;
    const int plane = 4 * d;
    const Mat& gamma = params_.value(bn_gamma_);

    // Through max-pool and ReLU into the normalized activations.
    std::vector<Mat> dbn(static_cast<std::size_t>(n), Mat::Zero(c_out, plane));
    for (int i = 0; i < n; ++i) {
        const auto& arg = cache.pool_arg[static_cast<std::size_t>(i)];
        const Mat& act = cache.bn_out[static_cast<std::size_t>(i)];
        Mat& g = dbn[static_cast<std::size_t>(i)];
        const int per_channel = static_cast<int>(arg.size()) / c_out;
        for (int flat = 0; flat < static_cast<int>(arg.size()); ++flat) {
            const int o = flat / per_channel;
            const int idx = arg[static_cast<std::size_t>(flat)];
            if (act(o, idx) > 0.0) g(o, idx) += dfused(i, flat);
        }
    }

    // Batch normalization.
    Mat& dgamma = grads[bn_gamma_];
    Mat& dbeta = grads[bn_beta_];
    std::vector<Mat> dconv(static_cast<std::size_t>(n), Mat(c_out, plane));
    for (int o = 0; o < c_out; ++o) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int i = 0; i < n; ++i) {
            sum_dy += dbn[static_cast<std::size_t>(i)].row(o).sum();
            sum_dy_xhat += dbn[static_cast<std::size_t>(i)].row(o).dot(cache.bn_xhat[static_cast<std::size_t>(i)].row(o));
        }
        dgamma(0, o) += sum_dy_xhat;
        dbeta(0, o) += sum_dy;
        const double istd = cache.inv_std[o];
        const double g = gamma(0, o);
        if (cache.training) {
            const double m = static_cast<double>(n) * plane;
            for (int i = 0; i < n; ++i) {
                dconv[static_cast<std::size_t>(i)].row(o) =
                    (g * istd / m) * (m * dbn[static_cast<std::size_t>(i)].row(o).array() - sum_dy -
                                      cache.bn_xhat[static_cast<std::size_t>(i)].row(o).array() * sum_dy_xhat);
            }
        } else {
            for (int i = 0; i < n; ++i) dconv[static_cast<std::size_t>(i)].row(o) = dbn[static_cast<std::size_t>(i)].row(o) * (g * istd);
        }
    }

    // Convolution.
    Mat& dw = grads[conv_w_];
    Mat& db = grads[conv_b_];
    const Mat& w = params_.value(conv_w_);
    for (int i = 0; i < n; ++i) {
        const Mat& x = cache.inputs[static_cast<std::size_t>(i)];
        const Mat& dz = dconv[static_cast<std::size_t>(i)];
        Mat dx = Mat::Zero(4, d);
        for (int o = 0; o < c_out; ++o) {
            db(0, o) += dz.row(o).sum();
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < d; ++c) {
                    const double gz = dz(o, r * d + c);
                    if (gz == 0.0) continue;
                    for (int a = -1; a <= 1; ++a) {
                        const int rr = r + a;
                        if (rr < 0 || rr >= 4) continue;
                        for (int b = -1; b <= 1; ++b) {
                            const int cc = c + b;
                            if (cc < 0 || cc >= d) continue;
                            const int k = (a + 1) * 3 + (b + 1);
                            dw(o, k) += gz * x(rr, cc);
                            dx(rr, cc) += gz * w(o, k);
                        }
                    }
                }
            }
        }
        for (int k = 0; k < 4; ++k) dslots[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = dx.row(k).transpose();
    }
    return dslots;
}

void FusionHead::update_running_stats(const Cache& cache) {
    if (config_.strategy != FusionStrategy::Conv || !cache.training) return;
    const double m = static_cast<double>(cache.batch) * 4 * config_.feature_dim;
    const double mom = config_.bn_momentum;
    Mat& rm = params_[bn_mean_].value;
    Mat& rv = params_[bn_var_].value;
    for (int o = 0; o < config_.conv_out_channels; ++o) {
        const double unbiased = m > 1.0 ? cache.batch_var[o] * m / (m - 1.0) : cache.batch_var[o];
        rm(0, o) = (1.0 - mom) * rm(0, o) + mom * cache.batch_mean[o];
        rv(0, o) = (1.0 - mom) * rv(0, o) + mom * unbiased;
    }
}

Vec FusionHead::fuse_conv(const FeatureBundle& bundle) const {
    if (config_.strategy != FusionStrategy::Conv) fail(Errc::BadConfig, "head was built for max-pool fusion");
    if (bundle.dim() != config_.feature_dim) fail(Errc::DimMismatch, "bundle length differs from feature_dim");
    const int d = config_.feature_dim;
    const int half = d / 2;
    const Mat z = conv_forward(stack_slots(bundle));
    const Mat& gamma = params_.value(bn_gamma_);
    const Mat& beta = params_.value(bn_beta_);
    const Mat& rm = params_.value(bn_mean_);
    const Mat& rv = params_.value(bn_var_);
    Vec out(config_.conv_flatten_size());
    for (int o = 0; o < config_.conv_out_channels; ++o) {
        const double istd = 1.0 / std::sqrt(rv(0, o) + config_.bn_eps);
        const auto act = [&](int idx) { return std::max(0.0, (z(o, idx) - rm(0, o)) * istd * gamma(0, o) + beta(0, o)); };
        for (int pr = 0; pr < 2; ++pr) {
            for (int pc = 0; pc < half; ++pc) {
                double best = act((2 * pr) * d + 2 * pc);
                for (int q = 1; q < 4; ++q) best = std::max(best, act((2 * pr + q / 2) * d + 2 * pc + q % 2));
                out[o * 2 * half + pr * half + pc] = best;
            }
        }
    }
    return out;
}

double FusionHead::mlp_head(const Vec& fused, bool training, nn::Rng* dropout_rng) const {
    return mlp_forward(fused.transpose(), training, dropout_rng, nullptr)(0, 0);
}

}  // namespace msmv::fusion
