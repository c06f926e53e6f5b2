#include "msmv/loss.hpp"

#include <cmath>
#include <string>

#include "msmv/error.hpp"
#include "msmv/nn.hpp"

namespace msmv::loss {

namespace {

void check_eps(double eps) {
    if (!(eps >= 0.0 && eps < 0.5)) fail(Errc::BadEpsilon, "label smoothing must lie in [0, 0.5), got " + std::to_string(eps));
}

}  // namespace

double smoothed_target(int label, double eps) {
    check_eps(eps);
    return label * (1.0 - eps) + eps / 2.0;
}

double smoothed_bce(double logit, int label, double eps) {
    const double y = smoothed_target(label, eps);
    return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

double smoothed_bce_grad(double logit, int label, double eps) {
    return nn::sigmoid(logit) - smoothed_target(label, eps);
}

}  // namespace msmv::loss
