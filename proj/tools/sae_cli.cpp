#include "sae/csv.hpp"
#include "sae/gvf.hpp"
#include "sae/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int cmd_gvf_fit(const std::string& input, const std::string& output) {
    sae::csv::Table t = sae::csv::read(input);
    int col_psi = -1, col_n = -1;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (t.header[j] == "psi_d" || t.header[j] == "psi") col_psi = static_cast<int>(j);
        if (t.header[j] == "N_i" || t.header[j] == "N") col_n = static_cast<int>(j);
    }
    if (col_psi < 0 || col_n < 0)
        throw std::runtime_error("gvf-fit input needs psi_d (or psi) and N_i (or N) columns");

    Eigen::VectorXd psi(static_cast<int>(t.rows.size())), n(static_cast<int>(t.rows.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        psi[static_cast<int>(r)] = std::stod(t.rows[r][col_psi]);
        n[static_cast<int>(r)] = std::stod(t.rows[r][col_n]);
    }
    const sae::GVFModel model = sae::fit_gvf(psi, n);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!output.empty()) {
        file.open(output, std::ios::binary);
        out = &file;
    }
    *out << "K,gamma,r2,n_fit\n"
         << sae::csv::join({sae::csv::format(model.K), sae::csv::format(model.gamma),
                            sae::csv::format(model.r2), std::to_string(model.n_fit)});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design-based small-area estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, gvf_input, gvf_output;
    std::string units_csv, areas_csv, design_kind = "pps_households", family = "area";
    int sample_size = 0;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates, bootstrap_b, threads;
    bool paper_scale = false;

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo evaluation of estimators");
    sim->add_option("config", config_path, "config file")->required();
    sim->add_option("--seed", seed, "master RNG seed");
    sim->add_option("--replicates", replicates, "Monte-Carlo replicates");
    sim->add_option("--bootstrap-B", bootstrap_b, "bootstrap replicates");
    sim->add_option("--threads", threads, "worker threads");
    sim->add_option("--out", out_dir, "output directory");
    sim->add_flag("--paper-scale", paper_scale,
                  "preset: N=1396763, M=30, n'=3700, R=1000");

    auto* est = app.add_subcommand("estimate", "single-draw domain estimates");
    est->add_option("population", units_csv, "unit CSV file")->required();
    est->add_option("--areas", areas_csv, "area auxiliary CSV file");
    est->add_option("--design", design_kind, "pps_households or srswor_units");
    est->add_option("--sample-size", sample_size, "n' households or n units")->required();
    est->add_option("--family", family, "area or unit");
    est->add_option("--seed", seed, "RNG seed");
    est->add_option("--bootstrap-B", bootstrap_b, "bootstrap replicates");
    est->add_option("--out", out_dir, "output directory");

    auto* gvf = app.add_subcommand("gvf-fit", "fit the power-law variance function");
    gvf->add_option("variances", gvf_input, "CSV with psi_d and N_i columns")->required();
    gvf->add_option("--out", gvf_output, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(sim)) {
            sae::SimulationConfig cfg = sae::load_config(config_path);
            if (paper_scale) {
                if (!cfg.generator) cfg.generator.emplace();
                cfg.generator->N = 1396763;
                cfg.generator->M = 30;
                cfg.design = {sae::DesignSpec::Kind::PpsHouseholds, 3700};
                cfg.replicates = 1000;
            }
            if (seed) cfg.seed = *seed;
            if (replicates) cfg.replicates = *replicates;
            if (bootstrap_b) cfg.bootstrap.B = *bootstrap_b;
            if (threads) cfg.threads = *threads;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            return sae::run_simulate(cfg);
        }
        if (app.got_subcommand(est)) {
            sae::SimulationConfig cfg;
            cfg.units_csv = units_csv;
            cfg.areas_csv = areas_csv;
            cfg.design.kind = design_kind == "srswor_units"
                                  ? sae::DesignSpec::Kind::SrsworUnits
                                  : sae::DesignSpec::Kind::PpsHouseholds;
            cfg.design.sample_size = sample_size;
            cfg.family = family == "unit" ? sae::Family::Unit : sae::Family::Area;
            if (seed) cfg.seed = *seed;
            if (bootstrap_b) cfg.bootstrap.B = *bootstrap_b;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            return sae::run_estimate(cfg);
        }
        if (app.got_subcommand(gvf)) return cmd_gvf_fit(gvf_input, gvf_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
