#pragma once

#include "sae/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace sae {

struct BootstrapSpec {
    int B = 200;
    int m = 0;  // resampled PSUs per replicate; 0 means n' - 1
    std::uint64_t seed = 0;
};

// Rescaling bootstrap on household PSUs. One run fixes a replicate set;
// every statistic evaluated against it sees the same resampled households,
// so replicate-level identities like var(A-B) = var(A)+var(B)-2cov(A,B)
// hold exactly.
class BootstrapRun {
public:
    BootstrapRun(const SampleDraw& sample, const BootstrapSpec& spec);

    int replicates() const { return spec_.B; }
    const SampleDraw& sample() const { return *sample_; }

    // Per-unit replicate weights w_k^{(b)} (design weight times the
    // rescaling multiplier), aligned with sample().units.
    Eigen::VectorXd weights(int b) const;
    const Eigen::VectorXd& full_weights() const { return full_w_; }

private:
    const SampleDraw* sample_;
    BootstrapSpec spec_;
    Eigen::VectorXd full_w_;
    Eigen::MatrixXd hh_mult_;  // households x B rescaling multipliers
};

// Per-domain statistic of a weighted sample; NaN entries mark domains the
// statistic could not produce for that replicate.
using Statistic = std::function<Eigen::VectorXd(const Eigen::VectorXd& w)>;

struct BootstrapMoments {
    Eigen::VectorXd value;         // per-domain variance or covariance
    Eigen::VectorXd missing_frac;  // fraction of unusable replicates
    std::vector<unsigned> flags;   // Unreliable when missing_frac > 0.2
};

// Replicate values of a statistic: B x M matrix.
Eigen::MatrixXd bootstrap_replicates(const BootstrapRun& run, const Statistic& stat);

// sigma^2_i = mean over usable replicates of (theta_i^(b) - theta_i)^2,
// centered at the full-sample value.
BootstrapMoments replicate_variance(const Eigen::MatrixXd& reps,
                                    const Eigen::VectorXd& full);

BootstrapMoments replicate_covariance(const Eigen::MatrixXd& reps_a,
                                      const Eigen::VectorXd& full_a,
                                      const Eigen::MatrixXd& reps_b,
                                      const Eigen::VectorXd& full_b);

BootstrapMoments bootstrap_variance(const SampleDraw& sample, const Statistic& stat,
                                    const BootstrapSpec& spec);

BootstrapMoments bootstrap_covariance(const SampleDraw& sample, const Statistic& stat_a,
                                      const Statistic& stat_b, const BootstrapSpec& spec);

}  // namespace sae
