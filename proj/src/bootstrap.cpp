#include "sae/bootstrap.hpp"

#include "sae/direct.hpp"
#include "sae/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sae {

BootstrapRun::BootstrapRun(const SampleDraw& sample, const BootstrapSpec& spec)
    : sample_(&sample), spec_(spec) {
    const int n_psu = sample.num_households();
    if (n_psu < 2) throw std::invalid_argument("bootstrap needs at least 2 PSUs");
    if (spec_.B < 2) throw std::invalid_argument("bootstrap needs B >= 2");
    if (spec_.m == 0) spec_.m = n_psu - 1;
    if (spec_.m < 1 || spec_.m > n_psu)
        throw std::invalid_argument("bootstrap resample size out of range");

    full_w_ = design_weights(sample);

    const double a = std::sqrt(static_cast<double>(spec_.m) / (n_psu - 1));
    const double scale = a * static_cast<double>(n_psu) / spec_.m;

    hh_mult_.resize(n_psu, spec_.B);
    std::mt19937_64 rng(spec_.seed);
    std::uniform_int_distribution<int> pick(0, n_psu - 1);
    std::vector<int> counts(n_psu);
    for (int b = 0; b < spec_.B; ++b) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int t = 0; t < spec_.m; ++t) ++counts[pick(rng)];
        for (int l = 0; l < n_psu; ++l)
            hh_mult_(l, b) = 1.0 - a + scale * counts[l];
    }
}

Eigen::VectorXd BootstrapRun::weights(int b) const {
    Eigen::VectorXd w = full_w_;
    for (int l = 0; l < sample_->num_households(); ++l) {
        const double mult = hh_mult_(l, b);
        for (int t = 0; t < sample_->hh_size[l]; ++t) w[sample_->hh_first[l] + t] *= mult;
    }
    return w;
}

Eigen::MatrixXd bootstrap_replicates(const BootstrapRun& run, const Statistic& stat) {
    Eigen::VectorXd first = stat(run.full_weights());
    Eigen::MatrixXd reps(run.replicates(), first.size());
    for (int b = 0; b < run.replicates(); ++b) reps.row(b) = stat(run.weights(b));
    return reps;
}

namespace {

BootstrapMoments moments(const Eigen::MatrixXd& reps_a, const Eigen::VectorXd& full_a,
                         const Eigen::MatrixXd& reps_b, const Eigen::VectorXd& full_b) {
    const int B = static_cast<int>(reps_a.rows());
    const int m = static_cast<int>(full_a.size());
    BootstrapMoments out;
    out.value.resize(m);
    out.missing_frac.resize(m);
    out.flags.assign(m, 0);
    for (int i = 0; i < m; ++i) {
        if (!std::isfinite(full_a[i]) || !std::isfinite(full_b[i])) {
            out.value[i] = std::numeric_limits<double>::quiet_NaN();
            out.missing_frac[i] = 1.0;
            out.flags[i] |= flags::Unreliable;
            continue;
        }
        double acc = 0.0;
        int used = 0;
        for (int b = 0; b < B; ++b) {
            const double da = reps_a(b, i) - full_a[i];
            const double db = reps_b(b, i) - full_b[i];
            if (!std::isfinite(da) || !std::isfinite(db)) continue;
            acc += da * db;
            ++used;
        }
        out.missing_frac[i] = 1.0 - static_cast<double>(used) / B;
        if (used == 0) {
            out.value[i] = std::numeric_limits<double>::quiet_NaN();
            out.flags[i] |= flags::Unreliable;
        } else {
            out.value[i] = acc / used;
            if (out.missing_frac[i] > 0.2) out.flags[i] |= flags::Unreliable;
        }
    }
    return out;
}

}  // namespace

BootstrapMoments replicate_variance(const Eigen::MatrixXd& reps,
                                    const Eigen::VectorXd& full) {
    return moments(reps, full, reps, full);
}

BootstrapMoments replicate_covariance(const Eigen::MatrixXd& reps_a,
                                      const Eigen::VectorXd& full_a,
                                      const Eigen::MatrixXd& reps_b,
                                      const Eigen::VectorXd& full_b) {
    if (reps_a.rows() != reps_b.rows() || reps_a.cols() != reps_b.cols())
        throw std::invalid_argument("replicate_covariance: replicate sets differ in shape");
    return moments(reps_a, full_a, reps_b, full_b);
}

BootstrapMoments bootstrap_variance(const SampleDraw& sample, const Statistic& stat,
                                    const BootstrapSpec& spec) {
    BootstrapRun run(sample, spec);
    const Eigen::VectorXd full = stat(run.full_weights());
    return replicate_variance(bootstrap_replicates(run, stat), full);
}

BootstrapMoments bootstrap_covariance(const SampleDraw& sample, const Statistic& stat_a,
                                      const Statistic& stat_b, const BootstrapSpec& spec) {
    BootstrapRun run(sample, spec);
    const Eigen::VectorXd full_a = stat_a(run.full_weights());
    const Eigen::VectorXd full_b = stat_b(run.full_weights());
    return replicate_covariance(bootstrap_replicates(run, stat_a), full_a,
                                bootstrap_replicates(run, stat_b), full_b);
}

}  // namespace sae
