#pragma once

#include "sae/population.hpp"
#include "sae/sampling.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace sae {

enum class EstimatorKind {
    DirectHajek,
    DirectGreg,
    SyntheticReg,
    SyntheticGreg,
    Composite,
    EblupFh,
};

namespace flags {
enum : unsigned {
    EmptyDomain = 1u << 0,
    UndefinedVariance = 1u << 1,
    VarClamped = 1u << 2,
    Ridged = 1u << 3,
    GregFallback = 1u << 4,
    LambdaClamped = 1u << 5,
    Unreliable = 1u << 6,
    NegativeMse = 1u << 7,
    Degenerate = 1u << 8,
};
}

struct DomainEstimate {
    int domain = -1;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double var_hat = std::numeric_limits<double>::quiet_NaN();
    EstimatorKind kind = EstimatorKind::DirectHajek;
    int n_i = 0;
    double n_hat = 0.0;  // sum of 1/pi over the domain sample
    unsigned flags = 0;

    bool empty() const { return (flags & flags::EmptyDomain) != 0; }
};

enum class VarMode { ExactJoint, Approx };

struct VarEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    unsigned flags = 0;
};

// Base design weights 1/pi, aligned with sample.units. Estimator point
// functions take a weight vector so bootstrap replicate weights plug in.
Eigen::VectorXd design_weights(const SampleDraw& sample);

DomainEstimate hajek_mean(const SampleDraw& sample, const Population& pop,
                          const std::string& var, int domain,
                          const Eigen::VectorXd& w);

// Horvitz-Thompson total and mean with known domain size; exactly
// design-unbiased, used by the enumeration oracles.
double ht_total(const SampleDraw& sample, const Population& pop,
                const std::string& var, int domain, const Eigen::VectorXd& w);
double ht_mean(const SampleDraw& sample, const Population& pop,
               const std::string& var, int domain, const Eigen::VectorXd& w,
               double domain_size);

VarEstimate hajek_var_direct(const SampleDraw& sample, const Population& pop,
                             const std::string& var, int domain, VarMode mode);

// Unbiased variance estimator of the HT mean with known N_i (uncentered
// double sum over the domain sample); requires joint probabilities.
double ht_var_exact(const SampleDraw& sample, const Population& pop,
                    const std::string& var, int domain, double domain_size);

struct WlsFit {
    Eigen::VectorXd coef;
    double condition = 0.0;
    unsigned flags = 0;
};

// Weighted least squares via the normal equations, with a ridge fallback
// applied only when the plain Gram matrix fails the condition gate.
std::optional<WlsFit> weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w);

struct GregEstimate {
    DomainEstimate est;
    Eigen::VectorXd coef;  // B_i, empty on fallback
};

GregEstimate greg_direct(const SampleDraw& sample, const Population& pop,
                         const std::string& var, int domain,
                         const Eigen::VectorXd& theta_x_i, const Eigen::VectorXd& w);

VarEstimate greg_var_direct(const SampleDraw& sample, const Population& pop,
                            const std::string& var, int domain,
                            const Eigen::VectorXd& coef, VarMode mode);

}  // namespace sae
