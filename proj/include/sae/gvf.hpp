#pragma once

#include <Eigen/Dense>

namespace sae {

// Power-law generalized variance function psi ~ K * N^gamma fitted by
// ordinary least squares on the log-log scale.
struct GVFModel {
    double K = 0.0;
    double gamma = 0.0;
    int n_fit = 0;
    double r2 = 0.0;
    unsigned flags = 0;
};

// Domains with psi <= 0 or NaN are excluded from the fit. Throws if fewer
// than 2 usable points remain; all-equal sizes degrade to gamma = 0 with
// K the geometric mean (flagged).
GVFModel fit_gvf(const Eigen::VectorXd& psi_d, const Eigen::VectorXd& domain_sizes);

Eigen::VectorXd smooth(const GVFModel& model, const Eigen::VectorXd& domain_sizes);

}  // namespace sae
