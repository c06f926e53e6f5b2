#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace msmv::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// A named array. Buffers (e.g. running statistics) are checkpointed but never optimized.
struct Param {
    std::string name;
    Mat value;
    bool frozen = false;
    bool buffer = false;

    [[nodiscard]] bool trainable() const noexcept { return !frozen && !buffer; }
};

/// Insertion-ordered parameter collection.
class ParamStore {
public:
    std::size_t add(std::string name, Mat init, bool buffer = false);

    [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    const Mat& value(std::size_t i) const { return params_[i].value; }

    [[nodiscard]] bool contains(const std::string& name) const { return index_.contains(name); }
    /// Throws BadConfig for an unknown name.
    std::size_t index_of(const std::string& name) const;
    Param& at(const std::string& name) { return params_[index_of(name)]; }
    const Param& at(const std::string& name) const { return params_[index_of(name)]; }

    [[nodiscard]] std::size_t scalar_count() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient arrays aligned with a ParamStore.
class Grads {
public:
    Grads() = default;
    explicit Grads(const ParamStore& store);

    Mat& operator[](std::size_t i) { return g_[i]; }
    const Mat& operator[](std::size_t i) const { return g_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return g_.size(); }

    void zero();
    Grads& operator+=(const Grads& other);
    Grads& operator*=(double s);

private:
    std::vector<Mat> g_;
};

Mat truncated_normal(int rows, int cols, double stddev, Rng& rng);
Mat uniform(int rows, int cols, double bound, Rng& rng);

/// y = x W + b with W stored as (in x out).
struct Linear {
    std::size_t weight = 0;
    std::size_t bias = 0;
    bool has_bias = true;
    int in = 0;
    int out = 0;

    enum class Init { TruncNormal002, FanInUniform };

    static Linear create(ParamStore& ps, const std::string& prefix, int in, int out, bool bias, Init init,
                         Rng& rng);

    Mat forward(const ParamStore& ps, const Mat& x) const;
    /// Accumulates dW, db into grads; returns dx when need_dx.
    Mat backward(const ParamStore& ps, const Mat& x, const Mat& dy, Grads& grads, bool need_dx = true) const;
};

struct LayerNormCache {
    Mat xhat;
    Vec inv_std;
};

/// Per-row normalization over the channel axis, eps 1e-5.
struct LayerNorm {
    std::size_t gamma = 0;
    std::size_t beta = 0;
    int dim = 0;
    double eps = 1e-5;

    static LayerNorm create(ParamStore& ps, const std::string& prefix, int dim);

    Mat forward(const ParamStore& ps, const Mat& x, LayerNormCache* cache) const;
    Mat backward(const ParamStore& ps, const LayerNormCache& cache, const Mat& dy, Grads& grads) const;
};

/// Exact (erf) GELU.
double gelu(double x) noexcept;
double gelu_grad(double x) noexcept;

double sigmoid(double x) noexcept;

}  // namespace msmv::nn
