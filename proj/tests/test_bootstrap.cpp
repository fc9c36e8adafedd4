#include "sae/bootstrap.hpp"

#include "sae/direct.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace sae;
using namespace sae::testing;

namespace {

// Hajek mean per domain from replicate weights.
Statistic hajek_stat(const SampleDraw& s, const Population& pop) {
    return [&s, &pop](const Eigen::VectorXd& w) {
        Eigen::VectorXd out(pop.num_domains());
        for (int d = 0; d < pop.num_domains(); ++d)
            out[d] = hajek_mean(s, pop, "y", d, w).theta;
        return out;
    };
}

Population random_population(int n_units, std::uint64_t seed, int domains = 1) {
    std::mt19937_64 rng(seed);
    std::vector<int> dom;
    std::vector<double> y;
    for (int k = 0; k < n_units; ++k) {
        dom.push_back(1 + k % domains);
        y.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    }
    return toy_population(dom, y);
}

}  // namespace

TEST_CASE("bootstrap of a constant statistic is exactly zero") {
    Population pop = toy_population({1, 1, 1, 1, 1, 1}, {3, 3, 3, 3, 3, 3});
    std::mt19937_64 rng(1);
    SampleDraw s = draw_srswor(pop, 4, rng);
    BootstrapMoments m = bootstrap_variance(s, hajek_stat(s, pop), {100, 0, 7});
    CHECK(m.value[0] == doctest::Approx(0.0));
    CHECK(m.missing_frac[0] == doctest::Approx(0.0));
}

TEST_CASE("replicate weights sum back to the full weights in expectation") {
    Population pop = random_population(20, 2);
    std::mt19937_64 rng(3);
    SampleDraw s = draw_srswor(pop, 8, rng);
    BootstrapSpec spec{400, 0, 11};
    BootstrapRun run(s, spec);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(8);
    for (int b = 0; b < spec.B; ++b) mean += run.weights(b);
    mean /= spec.B;
    // E[multiplier] = 1 by construction of the rescaling bootstrap; Monte
    // Carlo mean of each weight should sit near the design weight.
    const Eigen::VectorXd full = run.full_weights();
    for (int j = 0; j < 8; ++j)
        CHECK(mean[j] == doctest::Approx(full[j]).epsilon(0.25));
    CHECK(mean.sum() == doctest::Approx(full.sum()).epsilon(0.05));
}

TEST_CASE("covariance identity holds exactly on a shared replicate set") {
    Population pop = random_population(60, 5, 2);
    std::mt19937_64 rng(6);
    SampleDraw s = draw_srswor(pop, 30, rng);
    BootstrapSpec spec{150, 0, 21};
    BootstrapRun run(s, spec);

    Statistic stat = hajek_stat(s, pop);
    Statistic diff = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd v = stat(w);
        Eigen::VectorXd out(1);
        out[0] = v[0] - v[1];
        return out;
    };
    Statistic s0 = [&](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, stat(w)[0]).eval();
    };
    Statistic s1 = [&](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, stat(w)[1]).eval();
    };

    Eigen::MatrixXd rd = bootstrap_replicates(run, diff);
    Eigen::MatrixXd r0 = bootstrap_replicates(run, s0);
    Eigen::MatrixXd r1 = bootstrap_replicates(run, s1);
    const Eigen::VectorXd full = stat(run.full_weights());
    Eigen::VectorXd fd = Eigen::VectorXd::Constant(1, full[0] - full[1]);
    Eigen::VectorXd f0 = Eigen::VectorXd::Constant(1, full[0]);
    Eigen::VectorXd f1 = Eigen::VectorXd::Constant(1, full[1]);

    const double var_diff = replicate_variance(rd, fd).value[0];
    const double var0 = replicate_variance(r0, f0).value[0];
    const double var1 = replicate_variance(r1, f1).value[0];
    const double cov = replicate_covariance(r0, f0, r1, f1).value[0];
    CHECK(var_diff == doctest::Approx(var0 + var1 - 2.0 * cov).epsilon(1e-12));
}

TEST_CASE("covariance of a statistic with itself is its variance") {
    Population pop = random_population(16, 9);
    std::mt19937_64 rng(10);
    SampleDraw s = draw_srswor(pop, 6, rng);
    BootstrapSpec spec{80, 0, 33};
    Statistic stat = hajek_stat(s, pop);
    BootstrapMoments v = bootstrap_variance(s, stat, spec);
    BootstrapMoments c = bootstrap_covariance(s, stat, stat, spec);
    CHECK(c.value[0] == doctest::Approx(v.value[0]).epsilon(1e-12));
}

TEST_CASE("fixed seed is bit-reproducible") {
    Population pop = random_population(30, 12);
    std::mt19937_64 rng(14);
    SampleDraw s = draw_srswor(pop, 12, rng);
    BootstrapSpec spec{50, 0, 77};
    BootstrapRun a(s, spec), b(s, spec);
    for (int rep : {0, 13, 49}) CHECK(a.weights(rep) == b.weights(rep));
    BootstrapMoments ma = bootstrap_variance(s, hajek_stat(s, pop), spec);
    BootstrapMoments mb = bootstrap_variance(s, hajek_stat(s, pop), spec);
    CHECK(ma.value[0] == mb.value[0]);
}

TEST_CASE("rejects degenerate runs") {
    Population pop = random_population(6, 20);
    std::mt19937_64 rng(21);
    SampleDraw one = draw_srswor(pop, 1, rng);
    CHECK_THROWS_AS(BootstrapRun(one, BootstrapSpec{10, 0, 1}), std::invalid_argument);
    SampleDraw ok = draw_srswor(pop, 3, rng);
    CHECK_THROWS_AS(BootstrapRun(ok, BootstrapSpec{1, 0, 1}), std::invalid_argument);
}

TEST_CASE("bootstrap variance tracks the enumerated design variance") {
    // Small sampling fraction keeps the with-replacement approximation close:
    // 40 single-unit households, n = 5 (f = 0.125).
    Population pop = random_population(40, 25);
    auto support = enumerate_all_samples(pop, {DesignSpec::Kind::SrsworUnits, 5});
    const double true_var = design_variance(support, [&](const SampleDraw& s) {
        return hajek_mean(s, pop, "y", 0, design_weights(s)).theta;
    });

    std::mt19937_64 rng(31);
    double mean_boot = 0.0;
    const int draws = 150;
    for (int r = 0; r < draws; ++r) {
        SampleDraw s = draw_srswor(pop, 5, rng);
        BootstrapMoments m =
            bootstrap_variance(s, hajek_stat(s, pop), {300, 0, 1000u + static_cast<std::uint64_t>(r)});
        mean_boot += m.value[0];
    }
    mean_boot /= draws;
    CHECK(mean_boot == doctest::Approx(true_var).epsilon(0.15));
}
