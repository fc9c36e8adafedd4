#include "sae/gvf.hpp"

#include "sae/direct.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sae {

GVFModel fit_gvf(const Eigen::VectorXd& psi_d, const Eigen::VectorXd& domain_sizes) {
    if (psi_d.size() != domain_sizes.size())
        throw std::invalid_argument("fit_gvf: dimension mismatch");

    std::vector<double> lx, ly;
    for (int i = 0; i < psi_d.size(); ++i) {
        if (!(psi_d[i] > 0.0) || !std::isfinite(psi_d[i])) continue;
        if (!(domain_sizes[i] > 0.0))
            throw std::invalid_argument("fit_gvf: nonpositive domain size");
        lx.push_back(std::log(domain_sizes[i]));
        ly.push_back(std::log(psi_d[i]));
    }
    const int n = static_cast<int>(lx.size());
    if (n < 2) throw std::invalid_argument("fit_gvf: fewer than 2 usable variance points");

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }

    GVFModel model;
    model.n_fit = n;
    if (sxx <= 0.0) {
        // All sizes equal: slope undefined, fall back to a constant function.
        model.gamma = 0.0;
        model.K = std::exp(my);
        model.r2 = 0.0;
        model.flags |= flags::Degenerate;
        return model;
    }
    model.gamma = sxy / sxx;
    model.K = std::exp(my - model.gamma * mx);
    model.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return model;
}

Eigen::VectorXd smooth(const GVFModel& model, const Eigen::VectorXd& domain_sizes) {
    Eigen::VectorXd psi_s(domain_sizes.size());
    for (int i = 0; i < domain_sizes.size(); ++i)
        psi_s[i] = model.K * std::pow(domain_sizes[i], model.gamma);
    return psi_s;
}

}  // namespace sae
