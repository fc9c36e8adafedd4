#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sae {

// One input row of a unit file. x_tail holds x_2..x_P; the intercept x_1 = 1
// is implicit and added on population construction.
struct UnitRecord {
    long long unit_id = 0;
    long long household_id = 0;
    int domain_id = 0;
    double weight = 1.0;
    std::vector<std::pair<std::string, double>> y;
    std::vector<double> x_tail;
};

struct Household {
    long long id = 0;
    int domain = 0;   // domain index 0..M-1
    int first = 0;    // first unit index, units of a household are contiguous
    int size = 0;
};

// Area-level auxiliary vectors z_i and the true domain means of x.
struct AreaAuxiliary {
    Eigen::MatrixXd z;        // M x P
    Eigen::MatrixXd theta_x;  // M x P
};

// Fixed finite population partitioned into domains and households.
// Units are stored sorted by (domain, household); both groupings are
// contiguous ranges. Immutable after construction.
class Population {
public:
    static Population from_units(std::vector<UnitRecord> records);

    long long size() const { return static_cast<long long>(domain_of_.size()); }
    int num_domains() const { return static_cast<int>(domain_first_.size()); }
    int num_aux() const { return static_cast<int>(x_.cols()); }

    const std::vector<long long>& domain_sizes() const { return domain_sizes_; }
    int domain_of(int unit) const { return domain_of_[unit]; }
    int domain_first(int d) const { return domain_first_[d]; }
    int domain_label(int d) const { return domain_labels_[d]; }
    int domain_index(int label) const;

    const Eigen::MatrixXd& x() const { return x_; }   // N x P, column 0 is all ones
    const Eigen::VectorXd& y(const std::string& var) const;
    bool has_variable(const std::string& var) const { return y_.count(var) > 0; }
    std::vector<std::string> variables() const;

    const std::vector<Household>& households() const { return households_; }
    long long unit_id(int unit) const { return unit_ids_[unit]; }

private:
    Eigen::MatrixXd x_;
    std::map<std::string, Eigen::VectorXd> y_;
    std::vector<long long> unit_ids_;
    std::vector<int> domain_of_;
    std::vector<int> domain_first_;
    std::vector<long long> domain_sizes_;
    std::vector<int> domain_labels_;
    std::vector<Household> households_;
};

double true_domain_mean(const Population& pop, const std::string& var, int domain);

AreaAuxiliary domain_x_means(const Population& pop);

// Per-domain tallies offered to the synthesis filter.
struct DomainSynthStats {
    int domain_label = 0;
    long long n_units = 0;
    std::map<std::string, double> y_sum;  // over cloned units
};

struct SynthesisOptions {
    // Return false to drop the whole domain from the synthesized population.
    std::function<bool(const DomainSynthStats&)> keep_domain;
};

struct SynthesisReport {
    long long records_dropped_zero = 0;   // weight rounded to zero replications
    std::vector<int> dropped_domains;     // labels removed by the filter
    long long total_clones = 0;
};

// Clones each record round(weight) times (round-half-even); cloned households
// get fresh ids so household sizes are preserved per clone.
Population synthesize_population(const std::vector<UnitRecord>& records,
                                 const SynthesisOptions& opts = {},
                                 SynthesisReport* report = nullptr);

// CSV ingestion. Unit file header:
//   unit_id,household_id,domain_id,weight,y_<name>...,x_2...x_P
// Area file header:
//   domain_id,N_i,z_1...z_P
std::vector<UnitRecord> read_units_csv(const std::string& path);
struct AreaFile {
    std::vector<int> domain_labels;
    std::vector<long long> sizes;
    Eigen::MatrixXd z;
};
AreaFile read_areas_csv(const std::string& path);

}  // namespace sae
