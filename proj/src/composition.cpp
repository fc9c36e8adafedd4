#include "sae/composition.hpp"

#include <cmath>
#include <stdexcept>

namespace sae {

double compose(double theta_d, double theta_s, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("composition weight outside [0,1]");
    return lambda * theta_d + (1.0 - lambda) * theta_s;
}

LambdaResult optimal_lambda(double mse_d, double mse_s, double c) {
    LambdaResult r;
    const double denom = mse_d + mse_s - 2.0 * c;
    if (!(denom > 0.0)) {
        r.flags |= flags::Degenerate;
        r.value = 0.5;
        return r;
    }
    r.value = (mse_s - c) / denom;
    if (r.value < 0.0) {
        r.value = 0.0;
        r.flags |= flags::LambdaClamped;
    } else if (r.value > 1.0) {
        r.value = 1.0;
        r.flags |= flags::LambdaClamped;
    }
    return r;
}

double lambda_approx(double psi, double mse_s) {
    if (!(psi > 0.0)) throw std::invalid_argument("lambda_approx: psi must be positive");
    if (mse_s < 0.0) throw std::invalid_argument("lambda_approx: negative MSE");
    return mse_s / (psi + mse_s);
}

GwMse gw_mse_synthetic(double theta_s, double theta_d, double sigma2_diff,
                       double sigma2_s) {
    if (sigma2_diff < 0.0 || sigma2_s < 0.0)
        throw std::invalid_argument("gw_mse_synthetic: negative variance input");
    GwMse r;
    const double d = theta_s - theta_d;
    r.value = d * d - sigma2_diff + sigma2_s;
    if (r.value < 0.0) r.flags |= flags::NegativeMse;
    return r;
}

double mse_composite(double lambda, double psi_s, double sigma2_comp) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("mse_composite: weight outside [0,1]");
    if (!(psi_s > 0.0)) throw std::invalid_argument("mse_composite: psi_s must be positive");
    if (sigma2_comp < 0.0) throw std::invalid_argument("mse_composite: negative variance");
    return lambda * (1.0 - lambda) * psi_s + sigma2_comp;
}

CompositeResult first_step(int domain, double theta_d, double theta_s, double psi_s,
                           double sigma2_s, double sigma2_comp, bool direct_available) {
    CompositeResult r;
    r.domain = domain;
    r.step = 1;
    r.theta_d = theta_d;
    r.theta_s = theta_s;
    r.psi_s = psi_s;
    r.sigma2_syn = sigma2_s;
    if (!direct_available || !std::isfinite(theta_d)) {
        // No direct estimate: pure synthetic, flagged.
        r.lambda = 0.0;
        r.flags |= flags::EmptyDomain;
        r.theta_c = theta_s;
    } else {
        r.lambda = lambda_approx(psi_s, sigma2_s);
        r.theta_c = compose(theta_d, theta_s, r.lambda);
    }
    if (std::isfinite(sigma2_comp)) finish_mse(r, sigma2_comp);
    return r;
}

CompositeResult second_step(const CompositeResult& first, double theta_d,
                            double psi_s, double sigma2_cb) {
    if (!std::isfinite(first.mse_hat))
        throw std::invalid_argument("second_step: first-step MSE not available");
    CompositeResult r;
    r.domain = first.domain;
    r.step = 2;
    r.theta_d = theta_d;
    r.theta_s = first.theta_c;  // the initial composition plays the synthetic role
    r.psi_s = psi_s;
    r.sigma2_syn = first.mse_hat;
    if ((first.flags & flags::EmptyDomain) || !std::isfinite(theta_d)) {
        r.lambda = 0.0;
        r.flags |= flags::EmptyDomain;
        r.theta_c = first.theta_c;
    } else {
        r.lambda = first.mse_hat / (psi_s + first.mse_hat);
        r.theta_c = compose(theta_d, first.theta_c, r.lambda);
    }
    if (std::isfinite(sigma2_cb)) finish_mse(r, sigma2_cb);
    return r;
}

void finish_mse(CompositeResult& r, double sigma2_comp) {
    r.sigma2_comp = sigma2_comp;
    r.mse_hat = mse_composite(r.lambda, r.psi_s, sigma2_comp);
}

}  // namespace sae
