#include "sae/direct.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace sae {

Eigen::VectorXd design_weights(const SampleDraw& sample) {
    return sample.pi.cwiseInverse();
}

DomainEstimate hajek_mean(const SampleDraw& sample, const Population& pop,
                          const std::string& var, int domain,
                          const Eigen::VectorXd& w) {
    const Eigen::VectorXd& y = pop.y(var);
    DomainEstimate est;
    est.domain = domain;
    est.kind = EstimatorKind::DirectHajek;
    const auto& idx = sample.domain_units[domain];
    est.n_i = static_cast<int>(idx.size());
    if (idx.empty()) {
        est.flags |= flags::EmptyDomain;
        return est;
    }
    double n_hat = 0.0, total = 0.0;
    for (int j : idx) {
        n_hat += w[j];
        total += w[j] * y[sample.units[j]];
    }
    est.n_hat = n_hat;
    if (n_hat <= 0.0) {
        est.flags |= flags::EmptyDomain;
        return est;
    }
    est.theta = total / n_hat;
    return est;
}

double ht_total(const SampleDraw& sample, const Population& pop,
                const std::string& var, int domain, const Eigen::VectorXd& w) {
    const Eigen::VectorXd& y = pop.y(var);
    double total = 0.0;
    for (int j : sample.domain_units[domain]) total += w[j] * y[sample.units[j]];
    return total;
}

double ht_mean(const SampleDraw& sample, const Population& pop,
               const std::string& var, int domain, const Eigen::VectorXd& w,
               double domain_size) {
    return ht_total(sample, pop, var, domain, w) / domain_size;
}

namespace {

// Shared double-sum kernel of the exact-joint variance estimators:
// (1/scale^2) * sum_{k,l} (1 - pi_k pi_l / pi_kl) r_k r_l / (pi_k pi_l).
double joint_quadratic(const SampleDraw& sample, const std::vector<int>& idx,
                       const Eigen::VectorXd& resid, double scale) {
    double acc = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const int ja = idx[a], jb = idx[b];
            const auto pij = sample.joint_prob(ja, jb);
            if (!pij)
                throw std::invalid_argument(
                    "joint inclusion probabilities unavailable for this design");
            const double pk = sample.pi[ja], pl = sample.pi[jb];
            acc += (1.0 - pk * pl / *pij) * resid[a] * resid[b] / (pk * pl);
        }
    }
    return acc / (scale * scale);
}

VarEstimate var_from_residuals(const SampleDraw& sample, const std::vector<int>& idx,
                               const Eigen::VectorXd& resid, double n_hat,
                               VarMode mode) {
    VarEstimate v;
    if (idx.size() < 2) {
        v.flags |= flags::UndefinedVariance;
        return v;
    }
    if (mode == VarMode::Approx) {
        double acc = 0.0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const double invp = 1.0 / sample.pi[idx[a]];
            acc += invp * (invp - 1.0) * resid[a] * resid[a];
        }
        v.value = acc / (n_hat * n_hat);
        return v;
    }
    v.value = joint_quadratic(sample, idx, resid, n_hat);
    if (v.value < 0.0) {
        v.value = 0.0;
        v.flags |= flags::VarClamped;
    }
    return v;
}

}  // namespace

VarEstimate hajek_var_direct(const SampleDraw& sample, const Population& pop,
                             const std::string& var, int domain, VarMode mode) {
    const auto& idx = sample.domain_units[domain];
    const Eigen::VectorXd w = design_weights(sample);
    const DomainEstimate est = hajek_mean(sample, pop, var, domain, w);
    if (est.empty()) return {std::numeric_limits<double>::quiet_NaN(), flags::EmptyDomain};

    const Eigen::VectorXd& y = pop.y(var);
    Eigen::VectorXd resid(static_cast<int>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
        resid[static_cast<int>(a)] = y[sample.units[idx[a]]] - est.theta;
    return var_from_residuals(sample, idx, resid, est.n_hat, mode);
}

double ht_var_exact(const SampleDraw& sample, const Population& pop,
                    const std::string& var, int domain, double domain_size) {
    const auto& idx = sample.domain_units[domain];
    const Eigen::VectorXd& y = pop.y(var);
    Eigen::VectorXd vals(static_cast<int>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
        vals[static_cast<int>(a)] = y[sample.units[idx[a]]];
    return joint_quadratic(sample, idx, vals, domain_size);
}

std::optional<WlsFit> weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w) {
    const int p = static_cast<int>(X.cols());
    Eigen::MatrixXd gram = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd rhs = X.transpose() * (w.cwiseProduct(y));

    constexpr double kCondGate = 1e12;
    constexpr double kRidge = 1e-8;

    auto condition = [&](const Eigen::MatrixXd& g) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (!(hi > 0.0) || lo <= 0.0) return std::numeric_limits<double>::infinity();
        return hi / lo;
    };

    WlsFit fit;
    fit.condition = condition(gram);
    if (!std::isfinite(fit.condition) || fit.condition > kCondGate) {
        gram.diagonal().array() += kRidge * gram.trace() / p;
        fit.condition = condition(gram);
        fit.flags |= flags::Ridged;
        if (!std::isfinite(fit.condition) || fit.condition > kCondGate) return std::nullopt;
    }
    fit.coef = gram.ldlt().solve(rhs);
    if (!fit.coef.allFinite()) return std::nullopt;
    return fit;
}

GregEstimate greg_direct(const SampleDraw& sample, const Population& pop,
                         const std::string& var, int domain,
                         const Eigen::VectorXd& theta_x_i, const Eigen::VectorXd& w) {
    GregEstimate out;
    out.est.domain = domain;
    out.est.kind = EstimatorKind::DirectGreg;
    const auto& idx = sample.domain_units[domain];
    out.est.n_i = static_cast<int>(idx.size());
    if (idx.empty()) {
        out.est.flags |= flags::EmptyDomain;
        return out;
    }
    const Eigen::VectorXd& y = pop.y(var);
    const int n = static_cast<int>(idx.size());
    const int p = static_cast<int>(theta_x_i.size());
    Eigen::MatrixXd xs(n, p);
    Eigen::VectorXd ys(n), ws(n);
    for (int a = 0; a < n; ++a) {
        xs.row(a) = pop.x().row(sample.units[idx[a]]);
        ys[a] = y[sample.units[idx[a]]];
        ws[a] = w[idx[a]];
    }
    out.est.n_hat = ws.sum();
    auto fit = weighted_ls(xs, ys, ws);
    if (!fit) {
        // Singular even after the ridge gate; callers substitute the Hajek mean.
        out.est.flags |= flags::GregFallback;
        const DomainEstimate hajek = hajek_mean(sample, pop, var, domain, w);
        out.est.theta = hajek.theta;
        return out;
    }
    out.est.flags |= fit->flags;
    out.coef = fit->coef;
    out.est.theta = theta_x_i.dot(fit->coef);
    return out;
}

VarEstimate greg_var_direct(const SampleDraw& sample, const Population& pop,
                            const std::string& var, int domain,
                            const Eigen::VectorXd& coef, VarMode mode) {
    const auto& idx = sample.domain_units[domain];
    if (idx.empty()) return {std::numeric_limits<double>::quiet_NaN(), flags::EmptyDomain};
    const Eigen::VectorXd& y = pop.y(var);
    Eigen::VectorXd resid(static_cast<int>(idx.size()));
    double n_hat = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const int k = sample.units[idx[a]];
        resid[static_cast<int>(a)] = y[k] - pop.x().row(k).dot(coef);
        n_hat += 1.0 / sample.pi[idx[a]];
    }
    return var_from_residuals(sample, idx, resid, n_hat, mode);
}

}  // namespace sae
