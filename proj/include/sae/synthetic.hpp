#pragma once

#include "sae/direct.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sae {

struct RegressionFit {
    Eigen::VectorXd coef;         // beta (area level) or B (unit level)
    double gram_condition = 0.0;
    unsigned flags = 0;
};

struct SyntheticResult {
    std::vector<DomainEstimate> estimates;  // one per domain, including unsampled ones
    RegressionFit fit;
};

// Area-level regression-synthetic estimator: beta from the psi-weighted
// normal equations over domains with usable direct estimates, predictions
// z_i' beta for every domain.
SyntheticResult regression_synthetic(const std::vector<DomainEstimate>& direct,
                                     const Eigen::VectorXd& psi_s,
                                     const Eigen::MatrixXd& z);

// Unit-level GREG-synthetic estimator: one whole-sample B, predictions
// theta_x_i' B for every domain.
SyntheticResult greg_synthetic(const SampleDraw& sample, const Population& pop,
                               const std::string& var, const Eigen::MatrixXd& theta_x,
                               const Eigen::VectorXd& w);

}  // namespace sae
