#pragma once

namespace msmv::loss {

/// Smoothed target y' = y(1 - eps) + eps/2.
double smoothed_target(int label, double eps);

/// Binary cross-entropy of sigmoid(logit) against the smoothed target, evaluated as
/// max(z, 0) - z*y' + log1p(exp(-|z|)). Throws BadEpsilon unless 0 <= eps < 0.5.
double smoothed_bce(double logit, int label, double eps);

/// d/dz of smoothed_bce: sigmoid(z) - y'.
double smoothed_bce_grad(double logit, int label, double eps);

}  // namespace msmv::loss
