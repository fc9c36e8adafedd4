#include "sae/fay_herriot.hpp"

#include "sae/composition.hpp"

#include <doctest.h>

#include <random>

using namespace sae;

namespace {

Eigen::MatrixXd intercept_only(int m) { return Eigen::MatrixXd::Ones(m, 1); }

}  // namespace

TEST_CASE("fit_fh with a perfect area-level fit truncates at zero") {
    const int m = 6;
    Eigen::MatrixXd z(m, 2);
    Eigen::VectorXd theta(m), psi(m);
    for (int i = 0; i < m; ++i) {
        z(i, 0) = 1.0;
        z(i, 1) = 0.1 * i;
        theta[i] = 0.4 + 0.3 * z(i, 1);  // exactly linear: no area effect needed
        psi[i] = 0.05 + 0.01 * i;
    }
    FHFit fit = fit_fh(theta, psi, z);
    CHECK(fit.sigma_v2 == doctest::Approx(0.0));
    CHECK(fit.beta[0] == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(fit.beta[1] == doctest::Approx(0.3).epsilon(1e-8));
    for (int i = 0; i < m; ++i) CHECK(fit.gamma[i] == doctest::Approx(0.0));

    auto eblup = eblup_fh(fit, theta, z);
    for (int i = 0; i < m; ++i)
        CHECK(eblup[i].theta == doctest::Approx(theta[i]).epsilon(1e-8));
}

TEST_CASE("moment equation is satisfied at the returned variance") {
    Eigen::VectorXd theta(8), psi(8);
    theta << 0.2, 0.9, 0.4, 1.3, 0.1, 0.8, 0.55, 1.0;
    psi << 0.02, 0.05, 0.03, 0.04, 0.06, 0.02, 0.03, 0.05;
    Eigen::MatrixXd z = intercept_only(8);
    FHFit fit = fit_fh(theta, psi, z);
    REQUIRE(fit.sigma_v2 > 0.0);

    // Recompute WRSS at (sigma_v2, beta) independently.
    double num = 0, den = 0;
    for (int i = 0; i < 8; ++i) {
        const double w = 1.0 / (fit.sigma_v2 + psi[i]);
        num += w * theta[i];
        den += w;
    }
    const double beta = num / den;
    CHECK(fit.beta[0] == doctest::Approx(beta).epsilon(1e-8));
    double wrss = 0;
    for (int i = 0; i < 8; ++i) {
        const double r = theta[i] - beta;
        wrss += r * r / (fit.sigma_v2 + psi[i]);
    }
    CHECK(wrss == doctest::Approx(8.0 - 1.0).epsilon(1e-6));

    // gamma is the plug-in shrinkage factor.
    for (int i = 0; i < 8; ++i)
        CHECK(fit.gamma[i] ==
              doctest::Approx(fit.sigma_v2 / (fit.sigma_v2 + psi[i])).epsilon(1e-12));
}

TEST_CASE("eblup shares the composition path bit for bit") {
    Eigen::VectorXd theta(5), psi(5);
    theta << 0.3, 0.7, 0.5, 0.95, 0.15;
    psi << 0.01, 0.03, 0.02, 0.05, 0.04;
    Eigen::MatrixXd z = intercept_only(5);
    FHFit fit = fit_fh(theta, psi, z);
    auto eblup = eblup_fh(fit, theta, z);
    for (int i = 0; i < 5; ++i) {
        const double synth = z.row(i).dot(fit.beta);
        CHECK(eblup[i].theta == compose(theta[i], synth, fit.gamma[i]));
    }
}

TEST_CASE("missing direct estimates fall back to the synthetic part") {
    Eigen::VectorXd theta(6), psi(6);
    theta << 0.3, 0.7, std::numeric_limits<double>::quiet_NaN(), 0.95, 0.15, 0.5;
    psi << 0.01, 0.03, 0.02, 0.05, 0.04, 0.03;
    Eigen::MatrixXd z = intercept_only(6);
    FHFit fit = fit_fh(theta, psi, z);
    CHECK(fit.gamma[2] == doctest::Approx(0.0));
    auto eblup = eblup_fh(fit, theta, z);
    CHECK(eblup[2].theta == doctest::Approx(fit.beta[0]));
    CHECK((eblup[2].flags & flags::EmptyDomain));
}

TEST_CASE("moment estimator recovers the variance in simulation") {
    std::mt19937_64 rng(42);
    const int m = 400;
    const double sigma_v2 = 0.04, beta0 = 0.5, beta1 = 0.8;
    Eigen::MatrixXd z(m, 2);
    Eigen::VectorXd psi(m), theta(m);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < m; ++i) {
        z(i, 0) = 1.0;
        z(i, 1) = std::uniform_real_distribution<double>(0, 1)(rng);
        psi[i] = std::uniform_real_distribution<double>(0.01, 0.05)(rng);
        theta[i] = beta0 + beta1 * z(i, 1) + std::sqrt(sigma_v2) * gauss(rng) +
                   std::sqrt(psi[i]) * gauss(rng);
    }
    FHFit fit = fit_fh(theta, psi, z);
    // Monte-Carlo SE of the moment estimator is roughly sqrt(2/m)*(sigma+psi);
    // 0.01 is ~2 SE here.
    CHECK(std::abs(fit.sigma_v2 - sigma_v2) < 0.012);
    CHECK(std::abs(fit.beta[0] - beta0) < 0.06);
    CHECK(std::abs(fit.beta[1] - beta1) < 0.1);
}

TEST_CASE("mse_fh components") {
    Eigen::VectorXd theta(7), psi(7);
    theta << 0.2, 0.9, 0.4, 1.3, 0.1, 0.8, 0.55;
    psi << 0.02, 0.05, 0.03, 0.04, 0.06, 0.02, 0.03;
    Eigen::MatrixXd z = intercept_only(7);
    FHFit fit = fit_fh(theta, psi, z);
    Eigen::VectorXd mse = mse_fh(fit, psi, z);

    double info = 0;
    for (int i = 0; i < 7; ++i) info += 1.0 / (fit.sigma_v2 + psi[i]);
    for (int i = 0; i < 7; ++i) {
        const double g1 = fit.gamma[i] * psi[i];
        const double g2 = (1.0 - fit.gamma[i]) * (1.0 - fit.gamma[i]) / info;
        CHECK(mse[i] == doctest::Approx(g1 + g2).epsilon(1e-10));
        CHECK(mse[i] <= psi[i] + g2 + 1e-12);  // shrinkage cannot exceed psi in g1
        CHECK(mse[i] > 0.0);
    }
}

TEST_CASE("fit_fh input validation") {
    Eigen::VectorXd theta(2), psi(2);
    theta << 0.1, 0.2;
    psi << 0.01, 0.02;
    Eigen::MatrixXd z(2, 2);
    z << 1, 0.3, 1, 0.6;
    // M == P leaves no degrees of freedom for the moment equation.
    CHECK_THROWS_AS(fit_fh(theta, psi, z), std::runtime_error);
}
