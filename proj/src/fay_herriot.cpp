#include "sae/fay_herriot.hpp"

#include "sae/composition.hpp"

#include <cmath>
#include <stdexcept>

namespace sae {

namespace {

Eigen::VectorXd gls_beta(const Eigen::MatrixXd& z, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& psi, double sigma_v2) {
    const int p = static_cast<int>(z.cols());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < z.rows(); ++i) {
        const double w = 1.0 / (sigma_v2 + psi[i]);
        gram.noalias() += w * z.row(i).transpose() * z.row(i);
        rhs.noalias() += w * theta[i] * z.row(i).transpose();
    }
    return gram.ldlt().solve(rhs);
}

// Moment residual: weighted residual sum of squares minus its expectation M - P.
double moment_residual(const Eigen::MatrixXd& z, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& psi, double sigma_v2) {
    const Eigen::VectorXd beta = gls_beta(z, theta, psi, sigma_v2);
    double acc = 0.0;
    for (int i = 0; i < z.rows(); ++i) {
        const double r = theta[i] - z.row(i).dot(beta);
        acc += r * r / (sigma_v2 + psi[i]);
    }
    return acc - (static_cast<double>(z.rows()) - z.cols());
}

}  // namespace

FHFit fit_fh(const Eigen::VectorXd& theta_d, const Eigen::VectorXd& psi_s,
             const Eigen::MatrixXd& z) {
    const int m = static_cast<int>(z.rows());
    const int p = static_cast<int>(z.cols());
    if (theta_d.size() != m || psi_s.size() != m)
        throw std::invalid_argument("fit_fh: dimension mismatch");

    Eigen::MatrixXd zu(m, p);
    Eigen::VectorXd tu(m), pu(m);
    int used = 0;
    for (int i = 0; i < m; ++i) {
        if (!std::isfinite(theta_d[i])) continue;
        if (!(psi_s[i] > 0.0)) throw std::invalid_argument("fit_fh: nonpositive variance");
        zu.row(used) = z.row(i);
        tu[used] = theta_d[i];
        pu[used] = psi_s[i];
        ++used;
    }
    if (used <= p) throw std::runtime_error("fit_fh: need more domains than parameters");
    const Eigen::MatrixXd zf = zu.topRows(used);
    const Eigen::VectorXd tf = tu.head(used);
    const Eigen::VectorXd pf = pu.head(used);

    FHFit fit;
    const double f0 = moment_residual(zf, tf, pf, 0.0);
    if (f0 <= 0.0) {
        fit.sigma_v2 = 0.0;
    } else {
        double lo = 0.0;
        double hi = 100.0 * pf.maxCoeff();
        if (moment_residual(zf, tf, pf, hi) > 0.0)
            throw std::runtime_error("fit_fh: moment equation root outside bisection bounds");
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = moment_residual(zf, tf, pf, mid);
            if (std::abs(f) < 1e-10) {
                lo = hi = mid;
                break;
            }
            (f > 0.0 ? lo : hi) = mid;
        }
        fit.sigma_v2 = 0.5 * (lo + hi);
    }

    fit.beta = gls_beta(zf, tf, pf, fit.sigma_v2);
    fit.gamma.resize(m);
    for (int i = 0; i < m; ++i)
        fit.gamma[i] = std::isfinite(theta_d[i])
                           ? fit.sigma_v2 / (fit.sigma_v2 + psi_s[i])
                           : 0.0;
    return fit;
}

std::vector<DomainEstimate> eblup_fh(const FHFit& fit, const Eigen::VectorXd& theta_d,
                                     const Eigen::MatrixXd& z) {
    const int m = static_cast<int>(z.rows());
    std::vector<DomainEstimate> out(m);
    for (int i = 0; i < m; ++i) {
        DomainEstimate& e = out[i];
        e.domain = i;
        e.kind = EstimatorKind::EblupFh;
        const double synth = z.row(i).dot(fit.beta);
        if (std::isfinite(theta_d[i])) {
            e.theta = compose(theta_d[i], synth, fit.gamma[i]);
        } else {
            e.theta = synth;
            e.flags |= flags::EmptyDomain;
        }
    }
    return out;
}

Eigen::VectorXd mse_fh(const FHFit& fit, const Eigen::VectorXd& psi_s,
                       const Eigen::MatrixXd& z) {
    const int m = static_cast<int>(z.rows());
    const int p = static_cast<int>(z.cols());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < m; ++i) {
        if (fit.gamma[i] == 0.0 && !(psi_s[i] > 0.0)) continue;
        gram.noalias() +=
            z.row(i).transpose() * z.row(i) / (fit.sigma_v2 + psi_s[i]);
    }
    const Eigen::MatrixXd ginv = gram.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

    Eigen::VectorXd mse(m);
    for (int i = 0; i < m; ++i) {
        const double g1 = fit.gamma[i] * psi_s[i];
        const double q = z.row(i) * ginv * z.row(i).transpose();
        const double g2 = (1.0 - fit.gamma[i]) * (1.0 - fit.gamma[i]) * q;
        mse[i] = g1 + g2;
    }
    return mse;
}

}  // namespace sae
