#include "sae/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sae {

std::optional<double> SampleDraw::joint_prob(int a, int b) const {
    if (design.kind != DesignSpec::Kind::SrsworUnits) return std::nullopt;
    const double n = design.sample_size;
    const double N = static_cast<double>(frame_size);
    if (a == b) return n / N;
    return n * (n - 1.0) / (N * (N - 1.0));
}

namespace {

SampleDraw build_draw(const Population& pop, const std::vector<int>& household_idx,
                      double pi_per_size, DesignSpec design, std::uint64_t seed) {
    SampleDraw s;
    s.design = design;
    s.seed = seed;
    s.frame_size = pop.size();
    s.domain_units.resize(pop.num_domains());

    std::vector<int> hhs = household_idx;
    std::sort(hhs.begin(), hhs.end());
    const auto& households = pop.households();
    for (int h : hhs) {
        const Household& hh = households[h];
        s.hh_first.push_back(static_cast<int>(s.units.size()));
        s.hh_size.push_back(hh.size);
        for (int k = hh.first; k < hh.first + hh.size; ++k) {
            s.domain_units[pop.domain_of(k)].push_back(static_cast<int>(s.units.size()));
            s.units.push_back(k);
        }
    }
    s.pi.resize(static_cast<int>(s.units.size()));
    int pos = 0;
    for (std::size_t j = 0; j < hhs.size(); ++j) {
        const double pi = pi_per_size * households[hhs[j]].size;
        for (int t = 0; t < s.hh_size[j]; ++t) s.pi[pos++] = pi;
    }
    return s;
}

// Systematic selection at positions u, u+1, ..., u+n'-1 on the cumulated
// selection probabilities of the permuted households. All p <= 1, so each
// household catches at most one position.
std::vector<int> systematic_select(const std::vector<int>& perm,
                                   const std::vector<double>& p, int n_prime,
                                   double u) {
    std::vector<int> chosen;
    chosen.reserve(n_prime);
    double c = 0.0;
    int j = 0;
    for (int h : perm) {
        c += p[h];
        while (j < n_prime && u + j < c) {
            chosen.push_back(h);
            ++j;
        }
    }
    // Floating-point shortfall at the very end of the cumulated scale.
    while (j < n_prime && !perm.empty()) {
        chosen.push_back(perm.back());
        ++j;
    }
    return chosen;
}

std::vector<double> pps_probabilities(const Population& pop, int n_prime) {
    const auto& households = pop.households();
    const double n_total = static_cast<double>(pop.size());
    std::vector<double> p(households.size());
    for (std::size_t h = 0; h < households.size(); ++h) {
        p[h] = households[h].size * static_cast<double>(n_prime) / n_total;
        if (p[h] > 1.0 + 1e-12)
            throw DesignError("pps design infeasible: household " +
                              std::to_string(households[h].id) + " has pi = " +
                              std::to_string(p[h]) + " > 1");
        p[h] = std::min(p[h], 1.0);
    }
    return p;
}

}  // namespace

SampleDraw draw_pps_households(const Population& pop, int n_prime, std::mt19937_64& rng) {
    const int n_hh = static_cast<int>(pop.households().size());
    if (n_prime <= 0 || n_prime >= n_hh)
        throw std::invalid_argument("household sample size must be in [1, H-1]");
    const std::vector<double> p = pps_probabilities(pop, n_prime);

    std::vector<int> perm(n_hh);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

    std::vector<int> chosen = systematic_select(perm, p, n_prime, u);
    DesignSpec design{DesignSpec::Kind::PpsHouseholds, n_prime};
    return build_draw(pop, chosen, static_cast<double>(n_prime) / pop.size(), design, 0);
}

SampleDraw draw_srswor(const Population& pop, int n, std::mt19937_64& rng) {
    const long long frame = pop.size();
    if (n <= 0 || n > frame) throw std::invalid_argument("srswor sample size out of range");

    std::vector<int> all(frame);
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> picked;
    picked.reserve(n);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), n, rng);

    SampleDraw s;
    s.design = DesignSpec{DesignSpec::Kind::SrsworUnits, n};
    s.frame_size = frame;
    s.domain_units.resize(pop.num_domains());
    const double pi = static_cast<double>(n) / static_cast<double>(frame);
    s.pi = Eigen::VectorXd::Constant(n, pi);
    for (int k : picked) {
        // unit PSUs: each sampled unit is its own block
        s.hh_first.push_back(static_cast<int>(s.units.size()));
        s.hh_size.push_back(1);
        s.domain_units[pop.domain_of(k)].push_back(static_cast<int>(s.units.size()));
        s.units.push_back(k);
    }
    return s;
}

namespace {

void enumerate_srswor(const Population& pop, int n, std::size_t cap,
                      std::vector<std::pair<SampleDraw, double>>& out) {
    const int frame = static_cast<int>(pop.size());
    double count = 1.0;
    for (int j = 0; j < n; ++j) count = count * (frame - j) / (j + 1);
    if (count > static_cast<double>(cap))
        throw std::invalid_argument("enumeration cap exceeded");

    const double prob = 1.0 / count;
    std::vector<int> comb(n);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
        SampleDraw s;
        s.design = DesignSpec{DesignSpec::Kind::SrsworUnits, n};
        s.frame_size = frame;
        s.domain_units.resize(pop.num_domains());
        s.pi = Eigen::VectorXd::Constant(n, static_cast<double>(n) / frame);
        for (int k : comb) {
            s.hh_first.push_back(static_cast<int>(s.units.size()));
            s.hh_size.push_back(1);
            s.domain_units[pop.domain_of(k)].push_back(static_cast<int>(s.units.size()));
            s.units.push_back(k);
        }
        out.emplace_back(std::move(s), prob);

        int i = n - 1;
        while (i >= 0 && comb[i] == frame - n + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
    }
}

// Exhausts the systematic PPS scheme exactly: every permutation of the
// households, and within a permutation the breakpoints of u at which the
// selected set changes.
void enumerate_pps(const Population& pop, int n_prime, std::size_t cap,
                   std::vector<std::pair<SampleDraw, double>>& out) {
    const int n_hh = static_cast<int>(pop.households().size());
    if (n_prime <= 0 || n_prime >= n_hh)
        throw std::invalid_argument("household sample size must be in [1, H-1]");
    double perms = 1.0;
    for (int j = 2; j <= n_hh; ++j) perms *= j;
    if (perms * (n_hh + 1) > static_cast<double>(cap))
        throw std::invalid_argument("enumeration cap exceeded");

    const std::vector<double> p = pps_probabilities(pop, n_prime);
    std::map<std::vector<int>, double> support;

    std::vector<int> perm(n_hh);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        // Breakpoints: fractional parts of the cumulated probabilities.
        std::vector<double> cuts{0.0, 1.0};
        double c = 0.0;
        for (int h : perm) {
            c += p[h];
            const double f = c - std::floor(c);
            if (f > 1e-14 && f < 1.0 - 1e-14) cuts.push_back(f);
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double len = cuts[i + 1] - cuts[i];
            if (len <= 1e-14) continue;
            const double u = 0.5 * (cuts[i] + cuts[i + 1]);
            std::vector<int> chosen = systematic_select(perm, p, n_prime, u);
            std::sort(chosen.begin(), chosen.end());
            support[chosen] += len / perms;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    DesignSpec design{DesignSpec::Kind::PpsHouseholds, n_prime};
    for (const auto& [chosen, prob] : support) {
        out.emplace_back(
            build_draw(pop, chosen, static_cast<double>(n_prime) / pop.size(), design, 0),
            prob);
    }
}

}  // namespace

std::vector<std::pair<SampleDraw, double>> enumerate_all_samples(
    const Population& pop, const DesignSpec& design, std::size_t cap) {
    std::vector<std::pair<SampleDraw, double>> out;
    if (design.kind == DesignSpec::Kind::SrsworUnits)
        enumerate_srswor(pop, design.sample_size, cap, out);
    else
        enumerate_pps(pop, design.sample_size, cap, out);
    return out;
}

}  // namespace sae
