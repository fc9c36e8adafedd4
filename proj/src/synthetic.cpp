#include "sae/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace sae {

SyntheticResult regression_synthetic(const std::vector<DomainEstimate>& direct,
                                     const Eigen::VectorXd& psi_s,
                                     const Eigen::MatrixXd& z) {
    const int m = static_cast<int>(z.rows());
    const int p = static_cast<int>(z.cols());
    if (static_cast<int>(direct.size()) != m || psi_s.size() != m)
        throw std::invalid_argument("regression_synthetic: dimension mismatch");

    Eigen::MatrixXd zz(m, p);
    Eigen::VectorXd th(m), w(m);
    int used = 0;
    for (int i = 0; i < m; ++i) {
        if (direct[i].empty() || !std::isfinite(direct[i].theta)) continue;
        if (!(psi_s[i] > 0.0))
            throw std::invalid_argument("regression_synthetic: nonpositive smoothed variance");
        zz.row(used) = z.row(i);
        th[used] = direct[i].theta;
        w[used] = 1.0 / psi_s[i];
        ++used;
    }
    if (used < p)
        throw std::runtime_error("regression_synthetic: fewer usable domains than parameters");

    auto fit = weighted_ls(zz.topRows(used), th.head(used), w.head(used));
    if (!fit) throw std::runtime_error("regression_synthetic: singular weighted Gram matrix");

    SyntheticResult out;
    out.fit.coef = fit->coef;
    out.fit.gram_condition = fit->condition;
    out.fit.flags = fit->flags;
    out.estimates.resize(m);
    for (int i = 0; i < m; ++i) {
        DomainEstimate& e = out.estimates[i];
        e.domain = i;
        e.kind = EstimatorKind::SyntheticReg;
        e.theta = z.row(i).dot(fit->coef);
        e.n_i = direct[i].n_i;
        e.flags = fit->flags;
    }
    return out;
}

SyntheticResult greg_synthetic(const SampleDraw& sample, const Population& pop,
                               const std::string& var, const Eigen::MatrixXd& theta_x,
                               const Eigen::VectorXd& w) {
    const Eigen::VectorXd& y = pop.y(var);
    const int n = static_cast<int>(sample.units.size());
    const int p = static_cast<int>(theta_x.cols());
    Eigen::MatrixXd xs(n, p);
    Eigen::VectorXd ys(n);
    for (int a = 0; a < n; ++a) {
        xs.row(a) = pop.x().row(sample.units[a]);
        ys[a] = y[sample.units[a]];
    }
    auto fit = weighted_ls(xs, ys, w);
    if (!fit) throw std::runtime_error("greg_synthetic: singular weighted Gram matrix");

    SyntheticResult out;
    out.fit.coef = fit->coef;
    out.fit.gram_condition = fit->condition;
    out.fit.flags = fit->flags;
    const int m = static_cast<int>(theta_x.rows());
    out.estimates.resize(m);
    for (int i = 0; i < m; ++i) {
        DomainEstimate& e = out.estimates[i];
        e.domain = i;
        e.kind = EstimatorKind::SyntheticGreg;
        e.theta = theta_x.row(i).dot(fit->coef);
        e.n_i = sample.domain_size(i);
        e.flags = fit->flags;
    }
    return out;
}

}  // namespace sae
