#pragma once

#include "sae/direct.hpp"

#include <optional>

namespace sae {

// Convex combination of a direct and a synthetic estimate.
double compose(double theta_d, double theta_s, double lambda);

struct LambdaResult {
    double value = 0.0;
    unsigned flags = 0;  // LambdaClamped, Degenerate
};

// Optimal composition weight (mse_s - c) / (mse_d + mse_s - 2c), clamped to
// [0,1]. A nonpositive denominator marks the pair degenerate.
LambdaResult optimal_lambda(double mse_d, double mse_s, double c);

// Bias-ignoring approximation mse_s / (psi + mse_s).
double lambda_approx(double psi, double mse_s);

struct GwMse {
    double value = 0.0;
    unsigned flags = 0;  // NegativeMse when the raw value is negative
};

// Approximately design-unbiased MSE estimator for a synthetic (or composite)
// estimator: (theta_s - theta_d)^2 - sigma^2(theta_s - theta_d) + sigma^2(theta_s).
// May be negative; returned raw with a sign flag.
GwMse gw_mse_synthetic(double theta_s, double theta_d, double sigma2_diff,
                       double sigma2_s);

// Nonnegative MSE estimator lambda(1-lambda)*psi_s + sigma^2(theta_c) for a
// near-optimal composition.
double mse_composite(double lambda, double psi_s, double sigma2_comp);

struct CompositeResult {
    int domain = -1;
    double theta_c = std::numeric_limits<double>::quiet_NaN();
    double lambda = 0.0;
    int step = 1;
    double mse_hat = std::numeric_limits<double>::quiet_NaN();
    unsigned flags = 0;

    // components
    double theta_d = std::numeric_limits<double>::quiet_NaN();
    double theta_s = std::numeric_limits<double>::quiet_NaN();
    double psi_s = std::numeric_limits<double>::quiet_NaN();
    double sigma2_syn = std::numeric_limits<double>::quiet_NaN();
    double sigma2_comp = std::numeric_limits<double>::quiet_NaN();
};

// First step: lambda^(1) = sigma^2(theta_s)/(psi_s + sigma^2(theta_s)).
// sigma2_comp (bootstrap variance of the composition at this lambda) is
// supplied by the caller; pass NaN to leave mse_hat unset and fill it later
// with finish_mse.
CompositeResult first_step(int domain, double theta_d, double theta_s,
                           double psi_s, double sigma2_s, double sigma2_comp,
                           bool direct_available = true);

// Second step: treats the first composition as the synthetic part with
// lambda^(2) = m^(1) / (psi_s + m^(1)).
CompositeResult second_step(const CompositeResult& first, double theta_d,
                            double psi_s, double sigma2_cb);

// Fills mse_hat once the bootstrap variance of theta_c is known.
void finish_mse(CompositeResult& r, double sigma2_comp);

}  // namespace sae
