#include "msmv/nn.hpp"

#include <cmath>
#include <numbers>

#include "msmv/error.hpp"

namespace msmv::nn {

std::size_t ParamStore::add(std::string name, Mat init, bool buffer) {
    if (index_.contains(name)) fail(Errc::BadConfig, "duplicate parameter name " + name);
    const std::size_t id = params_.size();
    index_.emplace(name, id);
    params_.push_back(Param{std::move(name), std::move(init), false, buffer});
    return id;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(Errc::BadConfig, "unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

Grads::Grads(const ParamStore& store) {
    g_.reserve(store.size());
    for (const auto& p : store) g_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
}

void Grads::zero() {
    for (auto& g : g_) g.setZero();
}

Grads& Grads::operator+=(const Grads& other) {
    for (std::size_t i = 0; i < g_.size(); ++i) g_[i] += other.g_[i];
    return *this;
}

Grads& Grads::operator*=(double s) {
    for (auto& g : g_) g *= s;
    return *this;
}

Mat truncated_normal(int rows, int cols, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        double v = 0.0;
        do {
            v = dist(rng);
        } while (std::abs(v) > 2.0 * stddev);
        m.data()[i] = v;
    }
    return m;
}

Mat uniform(int rows, int cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

Linear Linear::create(ParamStore& ps, const std::string& prefix, int in, int out, bool bias, Init init,
                      Rng& rng) {
    Linear l;
    l.in = in;
    l.out = out;
    l.has_bias = bias;
    if (init == Init::TruncNormal002) {
        l.weight = ps.add(prefix + ".weight", truncated_normal(in, out, 0.02, rng));
        if (bias) l.bias = ps.add(prefix + ".bias", Mat::Zero(1, out));
    } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        l.weight = ps.add(prefix + ".weight", uniform(in, out, bound, rng));
        if (bias) l.bias = ps.add(prefix + ".bias", uniform(1, out, bound, rng));
    }
    return l;
}

Mat Linear::forward(const ParamStore& ps, const Mat& x) const {
    if (x.cols() != in) {
        fail(Errc::DimMismatch, "linear layer expects " + std::to_string(in) + " inputs, got " +
                                    std::to_string(x.cols()));
    }
    Mat y = x * ps.value(weight);
    if (has_bias) y.rowwise() += ps.value(bias).row(0);
    return y;
}

Mat Linear::backward(const ParamStore& ps, const Mat& x, const Mat& dy, Grads& grads, bool need_dx) const {
    grads[weight].noalias() += x.transpose() * dy;
    if (has_bias) grads[bias].row(0) += dy.colwise().sum();
    if (!need_dx) return {};
    return dy * ps.value(weight).transpose();
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& prefix, int dim) {
    LayerNorm ln;
    ln.dim = dim;
    ln.gamma = ps.add(prefix + ".weight", Mat::Ones(1, dim));
    ln.beta = ps.add(prefix + ".bias", Mat::Zero(1, dim));
    return ln;
}

Mat LayerNorm::forward(const ParamStore& ps, const Mat& x, LayerNormCache* cache) const {
    const Eigen::Index n = x.rows();
    Mat xhat(n, x.cols());
    Vec inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (x.row(i).array() - mean) * inv_std[i];
    }
    Mat y = xhat;
    y.array().rowwise() *= ps.value(gamma).row(0).array();
    y.rowwise() += ps.value(beta).row(0);
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

Mat LayerNorm::backward(const ParamStore& ps, const LayerNormCache& cache, const Mat& dy, Grads& grads) const {
    grads[gamma].row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    grads[beta].row(0) += dy.colwise().sum();

    Mat dxhat = dy;
    dxhat.array().rowwise() *= ps.value(gamma).row(0).array();
    const Eigen::Index n = dy.rows();
    Mat dx(n, dy.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean_d = dxhat.row(i).mean();
        const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / static_cast<double>(dy.cols());
        dx.row(i) = (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx) * cache.inv_std[i];
    }
    return dx;
}

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) noexcept {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace msmv::nn
