#pragma once

#include "sae/population.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace sae {

struct DesignSpec {
    enum class Kind { PpsHouseholds, SrsworUnits };
    Kind kind = Kind::PpsHouseholds;
    int sample_size = 0;  // n' households (pps) or n units (srswor)
};

// A realized sample: unit indices into the population, first-order inclusion
// probabilities, household blocks (PSUs) and per-domain sub-samples.
struct SampleDraw {
    std::vector<int> units;                       // population unit indices
    Eigen::VectorXd pi;                           // aligned with units
    std::vector<int> hh_first;                    // PSU blocks into units
    std::vector<int> hh_size;
    std::vector<std::vector<int>> domain_units;   // per domain, positions in units
    std::uint64_t seed = 0;
    DesignSpec design;
    long long frame_size = 0;

    int num_households() const { return static_cast<int>(hh_first.size()); }
    int domain_size(int d) const { return static_cast<int>(domain_units[d].size()); }

    // Joint inclusion probability of two sampled units (positions into units).
    // Available analytically for srswor only.
    std::optional<double> joint_prob(int a, int b) const;
};

// Design infeasible: some pi_k would exceed 1.
struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Systematic PPS on a uniformly random permutation of households; selected
// households are surveyed entirely, pi_k = h_l * n' / N.
SampleDraw draw_pps_households(const Population& pop, int n_prime, std::mt19937_64& rng);

SampleDraw draw_srswor(const Population& pop, int n, std::mt19937_64& rng);

// Exhaustive support of a design with probabilities summing to 1. Testing
// oracle for exact design expectations; capped combinatorial count.
std::vector<std::pair<SampleDraw, double>> enumerate_all_samples(
    const Population& pop, const DesignSpec& design, std::size_t cap = 1000000);

}  // namespace sae
