#pragma once

#include <cstdint>
#include <vector>

#include "msmv/nn.hpp"

namespace msmv::optim {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// First/second moments aligned with a ParamStore, plus the step counter.
struct OptimizerState {
    std::vector<nn::Mat> m;
    std::vector<nn::Mat> v;
    std::int64_t t = 0;

    OptimizerState() = default;
    explicit OptimizerState(const nn::ParamStore& params);
};

/// One decoupled-weight-decay Adam step on every trainable parameter:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
/// Frozen parameters and buffers are left untouched, moments included. Throws ShapeMismatch.
void adamw_step(nn::ParamStore& params, const nn::Grads& grads, OptimizerState& state, const AdamWConfig& cfg);

}  // namespace msmv::optim
