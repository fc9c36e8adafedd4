#pragma once

#include "sae/direct.hpp"

#include <Eigen/Dense>

#include <vector>

namespace sae {

// Fay-Herriot area-level fit: random-effect variance by the method of
// moments (bisection on the moment equation, truncated at zero) and the GLS
// coefficient at that variance.
struct FHFit {
    double sigma_v2 = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;  // per-domain shrinkage sigma_v2/(sigma_v2+psi_i)
    unsigned flags = 0;
};

FHFit fit_fh(const Eigen::VectorXd& theta_d, const Eigen::VectorXd& psi_s,
             const Eigen::MatrixXd& z);

// EBLUP theta_i = gamma_i * theta_d_i + (1-gamma_i) * z_i' beta. Domains
// without a direct estimate get the synthetic part with gamma = 0.
std::vector<DomainEstimate> eblup_fh(const FHFit& fit, const Eigen::VectorXd& theta_d,
                                     const Eigen::MatrixXd& z);

// First-order plug-in MSE, g1 + g2 terms.
Eigen::VectorXd mse_fh(const FHFit& fit, const Eigen::VectorXd& psi_s,
                       const Eigen::MatrixXd& z);

}  // namespace sae
