#include "msmv/optimizer.hpp"

#include <cmath>

#include "msmv/error.hpp"

namespace msmv::optim {

OptimizerState::OptimizerState(const nn::ParamStore& params) {
    for (const auto& p : params) {
        m.push_back(nn::Mat::Zero(p.value.rows(), p.value.cols()));
        v.push_back(nn::Mat::Zero(p.value.rows(), p.value.cols()));
    }
}

void adamw_step(nn::ParamStore& params, const nn::Grads& grads, OptimizerState& state, const AdamWConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        fail(Errc::ShapeMismatch, "optimizer state, gradients and parameters are not aligned");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i].value;
        if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || state.m[i].rows() != p.rows() ||
            state.m[i].cols() != p.cols() || state.v[i].rows() != p.rows() || state.v[i].cols() != p.cols()) {
            fail(Errc::ShapeMismatch, "shape mismatch for " + params[i].name);
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        nn::Param& p = params[i];
        if (!p.trainable()) continue;
        const nn::Mat& g = grads[i];
        nn::Mat& m = state.m[i];
        nn::Mat& v = state.v[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        const auto step = (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
        p.value.array() -= cfg.lr * step + cfg.lr * cfg.weight_decay * p.value.array();
    }
}

}  // namespace msmv::optim
