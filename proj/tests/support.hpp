#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "msmv/exam.hpp"
#include "msmv/fusion.hpp"
#include "msmv/grid.hpp"
#include "msmv/nn.hpp"
#include "msmv/swin.hpp"

namespace msmv::test {

inline swin::BackboneConfig tiny_backbone() {
    swin::BackboneConfig c;
    c.input_side = 28;
    c.patch_size = 2;
    c.embed_dim = 8;
    c.depths = {2, 2};
    c.num_heads = {2, 4};
    c.window_size = 7;
    c.feature_dim = 16;
    c.mlp_ratio = 2.0;
    return c;
}

inline fusion::FusionConfig tiny_fusion(fusion::FusionStrategy s, int feature_dim = 16) {
    fusion::FusionConfig c;
    c.strategy = s;
    c.feature_dim = feature_dim;
    c.width = 12;
    c.hidden = 6;
    return c;
}

inline Grid random_grid(int rows, int cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid g(rows, cols);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
    return g;
}

inline nn::Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    nn::Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

inline ViewPlanes random_planes(View v, int side, std::mt19937_64& rng) {
    return ViewPlanes{ImagePlane{random_grid(side, side, rng), v, Scale::Masked},
                      ImagePlane{random_grid(side, side, rng), v, Scale::Cropped}};
}

inline BreastExam random_exam(const std::string& id, int label, bool cc, bool mlo, int side, std::mt19937_64& rng) {
    BreastExam e;
    e.breast_id = id;
    e.patient_id = "P" + id;
    e.label = label;
    if (cc) e.views[0] = random_planes(View::CC, side, rng);
    if (mlo) e.views[1] = random_planes(View::MLO, side, rng);
    return e;
}

/// |a - n| / max(|a|, |n|, floor): relative error with an absolute floor for near-zero entries.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference of f with respect to entry `k` of parameter `index` in store.
inline double central_difference(nn::ParamStore& store, std::size_t index, Eigen::Index k,
                                 const std::function<double()>& f, double h = 1e-6) {
    double& x = store[index].value.data()[k];
    const double saved = x;
    x = saved + h;
    const double plus = f();
    x = saved - h;
    const double minus = f();
    x = saved;
    return (plus - minus) / (2.0 * h);
}

/// Largest relative error over up to `per_param` random entries of every parameter that is not a buffer.
/// With several steps, an entry's error is its best agreement across them.
inline double max_grad_error(nn::ParamStore& store, const nn::Grads& grads, const std::function<double()>& f,
                             int per_param, std::mt19937_64& rng, std::string* worst = nullptr,
                             std::vector<double> steps = {1e-6}) {
    double err = 0.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (store[i].buffer) continue;
        const auto n = store[i].value.size();
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        const int samples = static_cast<int>(std::min<Eigen::Index>(per_param, n));
        for (int s = 0; s < samples; ++s) {
            const Eigen::Index k = samples == n ? s : pick(rng);
            double e = std::numeric_limits<double>::infinity();
            for (double h : steps) e = std::min(e, rel_error(grads[i].data()[k], central_difference(store, i, k, f, h)));
            if (e > err) {
                err = e;
                if (worst) *worst = store[i].name + "[" + std::to_string(k) + "]";
            }
        }
    }
    return err;
}

}  // namespace msmv::test
