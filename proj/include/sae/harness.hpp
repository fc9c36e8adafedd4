#pragma once

#include "sae/bootstrap.hpp"
#include "sae/composition.hpp"
#include "sae/direct.hpp"
#include "sae/fay_herriot.hpp"
#include "sae/gvf.hpp"
#include "sae/population.hpp"
#include "sae/sampling.hpp"
#include "sae/synthetic.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sae {

// Synthetic-population generator: binary y through a logistic link on binary
// auxiliaries, with per-domain intercept shifts controlling the bias of
// synthetic estimators.
struct GeneratorSpec {
    int M = 30;
    long long N = 20000;
    int P = 4;                 // auxiliary vector length including intercept
    int household_max = 4;     // household sizes uniform on 1..household_max
    double domain_spread = 8.0;  // largest/smallest expected domain size ratio
    double bias_sd = 0.0;        // sd of per-domain intercept shifts
    double intercept = -0.9;
    std::vector<double> slope;   // coefficients of x_2..x_P
    std::vector<double> x_rate;  // Bernoulli rates of x_2..x_P
    std::uint64_t seed = 1;
    std::string variable = "y";
};

Population generate_population(const GeneratorSpec& spec);

enum class Family { Area, Unit };

struct SimulationConfig {
    std::string units_csv;
    std::string areas_csv;
    std::optional<GeneratorSpec> generator;
    DesignSpec design;
    int replicates = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    BootstrapSpec bootstrap;
    Family family = Family::Area;
    std::vector<std::string> variables;  // empty: all variables in the population
    std::optional<std::pair<double, double>> class_cuts;
    std::string out_dir = "out";
};

// Plain key = value config with [sections].
SimulationConfig load_config(const std::string& path);

// Everything one realized sample yields for one study variable.
struct PipelineResult {
    std::vector<DomainEstimate> direct;
    Eigen::VectorXd psi_d;
    GVFModel gvf;
    Eigen::VectorXd psi_s;
    SyntheticResult synthetic;
    Eigen::VectorXd sigma2_syn;
    std::vector<CompositeResult> comp1;
    std::vector<CompositeResult> comp2;
    FHFit fh;
    std::vector<DomainEstimate> eblup;
    Eigen::VectorXd mse_eblup;
};

PipelineResult run_pipeline(const SampleDraw& sample, const Population& pop,
                            const std::string& var, Family family,
                            const AreaAuxiliary& aux, const BootstrapSpec& bspec);

// Estimator ids in the fixed report order.
const std::vector<std::string>& estimator_ids();  // direct, synthetic, comp1, comp2,
                                                  // eblup, mse_comp1, mse_comp2, mse_eblup

struct AccuracyReport {
    std::vector<std::string> estimators;
    std::vector<int> domain_labels;
    Eigen::VectorXd truth;       // true domain means (point estimators) or
                                 // Monte-Carlo MSE targets (MSE estimators, per row)
    Eigen::MatrixXd target;      // estimators x domains target values
    Eigen::VectorXd nbar;        // mean realized domain sample size
    std::vector<int> size_class; // 0 small, 1 medium, 2 large
    Eigen::MatrixXd rmse;        // estimators x domains
    Eigen::MatrixXd ab;
    Eigen::MatrixXd failures;    // count of unusable replicates per cell
    int replicates = 0;
};

std::pair<double, double> rmse_ab(const std::vector<double>& estimates, double truth);

// Tercile split by mean realized size; remainder goes to the smaller classes.
// Ties broken by (nbar, domain index).
std::vector<int> classify_domains(const Eigen::VectorXd& nbar,
                                  std::optional<std::pair<double, double>> cuts = {});

// Class columns: any, small, medium, large.
struct ClassTable {
    std::vector<std::string> estimators;
    Eigen::MatrixXd rmse;  // estimators x 4
    Eigen::MatrixXd ab;
};

ClassTable class_averages(const AccuracyReport& report);

// Ratios of class-average accuracy to a benchmark row. Point estimators
// divide by `benchmark`, MSE-estimator rows by `mse_benchmark`.
ClassTable relative_table(const ClassTable& averages, const std::string& benchmark,
                          const std::string& mse_benchmark);

AccuracyReport run_monte_carlo(const SimulationConfig& cfg, const Population& pop,
                               const AreaAuxiliary& aux, const std::string& var);

// Full `simulate` entry point: load or generate the population, run each
// study variable, write summary/per-domain/relative CSVs and a manifest.
int run_simulate(const SimulationConfig& cfg);

// Single-draw `estimate` entry point: writes per-domain estimate CSVs.
int run_estimate(const SimulationConfig& cfg);

}  // namespace sae
