#include "sae/harness.hpp"

#include "sae/csv.hpp"
#include "sae/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sae {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double default_slope(int j) {
    static const double table[] = {1.6, -0.9, 0.5, 0.4, -0.3};
    return table[j % 5];
}

double default_rate(int j) {
    static const double table[] = {0.2, 0.45, 0.5, 0.3, 0.35};
    return table[j % 5];
}

}  // namespace

Population generate_population(const GeneratorSpec& spec) {
    if (spec.M < 1 || spec.N < spec.M || spec.P < 1)
        throw std::invalid_argument("invalid generator spec");

    // Geometric spread of expected domain sizes, largest-remainder apportionment.
    std::vector<double> wts(spec.M);
    for (int i = 0; i < spec.M; ++i)
        wts[i] = spec.M > 1 ? std::pow(spec.domain_spread, static_cast<double>(i) / (spec.M - 1))
                            : 1.0;
    const double wsum = std::accumulate(wts.begin(), wts.end(), 0.0);
    std::vector<long long> sizes(spec.M);
    long long assigned = 0;
    std::vector<std::pair<double, int>> rema(spec.M);
    for (int i = 0; i < spec.M; ++i) {
        const double exact = spec.N * wts[i] / wsum;
        sizes[i] = std::max<long long>(1, static_cast<long long>(std::floor(exact)));
        assigned += sizes[i];
        rema[i] = {exact - std::floor(exact), i};
    }
    std::sort(rema.rbegin(), rema.rend());
    for (int i = 0; assigned < spec.N; ++i, ++assigned) ++sizes[rema[i % spec.M].second];
    while (assigned > spec.N) {
        for (int i = 0; i < spec.M && assigned > spec.N; ++i)
            if (sizes[i] > 1) {
                --sizes[i];
                --assigned;
            }
    }

    std::vector<double> slope(spec.P - 1), rate(spec.P - 1);
    for (int j = 0; j + 1 < spec.P; ++j) {
        slope[j] = j < static_cast<int>(spec.slope.size()) ? spec.slope[j] : default_slope(j);
        rate[j] = j < static_cast<int>(spec.x_rate.size()) ? spec.x_rate[j] : default_rate(j);
    }

    std::vector<UnitRecord> records;
    records.reserve(spec.N);
    long long next_unit = 0, next_hh = 0;
    for (int i = 0; i < spec.M; ++i) {
        std::mt19937_64 rng(derive_seed(spec.seed, 1000 + i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double shift = spec.bias_sd * gauss(rng);

        long long left = sizes[i];
        while (left > 0) {
            const int hh_size = static_cast<int>(std::min<long long>(
                left, 1 + static_cast<long long>(unif(rng) * spec.household_max)));
            const long long hh = next_hh++;
            for (int t = 0; t < hh_size; ++t) {
                UnitRecord r;
                r.unit_id = next_unit++;
                r.household_id = hh;
                r.domain_id = i + 1;
                r.x_tail.resize(spec.P - 1);
                double eta = spec.intercept + shift;
                for (int j = 0; j + 1 < spec.P; ++j) {
                    r.x_tail[j] = unif(rng) < rate[j] ? 1.0 : 0.0;
                    eta += slope[j] * r.x_tail[j];
                }
                r.y.emplace_back(spec.variable, unif(rng) < logistic(eta) ? 1.0 : 0.0);
                records.push_back(std::move(r));
            }
            left -= hh_size;
        }
    }
    return Population::from_units(std::move(records));
}

// ---------------------------------------------------------------------------
// Config file

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    SimulationConfig cfg;
    GeneratorSpec gen;
    bool use_generator = true;
    std::string section, line;
    while (std::getline(in, line)) {
        const auto cut = line.find_first_of(";#");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error("bad section line: " + line);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad config line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (section == "population") {
            if (key == "source") use_generator = (val == "generate");
            else if (key == "units_csv") cfg.units_csv = val;
            else if (key == "areas_csv") cfg.areas_csv = val;
            else if (key == "M") gen.M = std::stoi(val);
            else if (key == "N") gen.N = std::stoll(val);
            else if (key == "P") gen.P = std::stoi(val);
            else if (key == "household_max") gen.household_max = std::stoi(val);
            else if (key == "domain_spread") gen.domain_spread = std::stod(val);
            else if (key == "bias_sd") gen.bias_sd = std::stod(val);
            else if (key == "intercept") gen.intercept = std::stod(val);
            else if (key == "pop_seed") gen.seed = std::stoull(val);
            else if (key == "variable") gen.variable = val;
            else throw std::runtime_error("unknown population key: " + key);
        } else if (section == "design") {
            if (key == "kind") {
                if (val == "pps_households") cfg.design.kind = DesignSpec::Kind::PpsHouseholds;
                else if (val == "srswor_units") cfg.design.kind = DesignSpec::Kind::SrsworUnits;
                else throw std::runtime_error("unknown design kind: " + val);
            } else if (key == "n_prime" || key == "n") {
                cfg.design.sample_size = std::stoi(val);
            } else {
                throw std::runtime_error("unknown design key: " + key);
            }
        } else if (section == "simulate") {
            if (key == "replicates") cfg.replicates = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "threads") cfg.threads = std::stoi(val);
            else if (key == "out") cfg.out_dir = val;
            else if (key == "family") {
                if (val == "area") cfg.family = Family::Area;
                else if (val == "unit") cfg.family = Family::Unit;
                else throw std::runtime_error("unknown family: " + val);
            } else if (key == "variables") {
                std::stringstream ss(val);
                std::string item;
                while (std::getline(ss, item, ',')) cfg.variables.push_back(trim(item));
            } else if (key == "class_cuts") {
                const auto comma = val.find(',');
                if (comma == std::string::npos)
                    throw std::runtime_error("class_cuts needs two values");
                cfg.class_cuts = {std::stod(val.substr(0, comma)),
                                  std::stod(val.substr(comma + 1))};
            } else {
                throw std::runtime_error("unknown simulate key: " + key);
            }
        } else if (section == "bootstrap") {
            if (key == "B") cfg.bootstrap.B = std::stoi(val);
            else if (key == "m") cfg.bootstrap.m = std::stoi(val);
            else throw std::runtime_error("unknown bootstrap key: " + key);
        } else {
            throw std::runtime_error("unknown config section: " + section);
        }
    }
    if (use_generator && cfg.units_csv.empty()) cfg.generator = gen;
    if (cfg.design.sample_size <= 0)
        throw std::runtime_error("config must set [design] n_prime (or n)");
    if (cfg.replicates < 1) throw std::runtime_error("replicates must be >= 1");
    return cfg;
}

// ---------------------------------------------------------------------------
// Pipeline for one realized sample

namespace {

// Direct point estimates for all domains at the given weights. GREG falls
// back to the Hajek mean on singular domain fits (flagged).
std::vector<DomainEstimate> direct_points(const SampleDraw& sample, const Population& pop,
                                          const std::string& var, Family family,
                                          const AreaAuxiliary& aux, const Eigen::VectorXd& w,
                                          std::vector<Eigen::VectorXd>* coefs = nullptr) {
    const int m = pop.num_domains();
    std::vector<DomainEstimate> out(m);
    if (coefs) coefs->assign(m, Eigen::VectorXd());
    for (int i = 0; i < m; ++i) {
        if (family == Family::Area) {
            out[i] = hajek_mean(sample, pop, var, i, w);
        } else {
            GregEstimate g = greg_direct(sample, pop, var, i, aux.theta_x.row(i), w);
            out[i] = g.est;
            if (coefs) (*coefs)[i] = g.coef;
        }
    }
    return out;
}

Eigen::VectorXd point_vector(const std::vector<DomainEstimate>& ests) {
    Eigen::VectorXd v(static_cast<int>(ests.size()));
    for (std::size_t i = 0; i < ests.size(); ++i)
        v[static_cast<int>(i)] = ests[i].empty()
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : ests[i].theta;
    return v;
}

Eigen::VectorXd synthetic_points(const SampleDraw& sample, const Population& pop,
                                 const std::string& var, Family family,
                                 const AreaAuxiliary& aux, const Eigen::VectorXd& psi_s,
                                 const std::vector<DomainEstimate>& direct,
                                 const Eigen::VectorXd& w) {
    try {
        SyntheticResult syn =
            family == Family::Area
                ? regression_synthetic(direct, psi_s, aux.z)
                : greg_synthetic(sample, pop, var, aux.theta_x, w);
        return point_vector(syn.estimates);
    } catch (const std::exception&) {
        return Eigen::VectorXd::Constant(pop.num_domains(),
                                         std::numeric_limits<double>::quiet_NaN());
    }
}

}  // namespace

PipelineResult run_pipeline(const SampleDraw& sample, const Population& pop,
                            const std::string& var, Family family,
                            const AreaAuxiliary& aux, const BootstrapSpec& bspec) {
    const int m = pop.num_domains();
    PipelineResult r;
    const Eigen::VectorXd w_full = design_weights(sample);

    std::vector<Eigen::VectorXd> coefs;
    r.direct = direct_points(sample, pop, var, family, aux, w_full, &coefs);

    r.psi_d.resize(m);
    for (int i = 0; i < m; ++i) {
        VarEstimate v;
        if (family == Family::Area || r.direct[i].empty() ||
            (r.direct[i].flags & flags::GregFallback))
            v = hajek_var_direct(sample, pop, var, i, VarMode::Approx);
        else
            v = greg_var_direct(sample, pop, var, i, coefs[i], VarMode::Approx);
        r.psi_d[i] = v.value;
        r.direct[i].var_hat = v.value;
        r.direct[i].flags |= v.flags;
    }

    Eigen::VectorXd n_vec(m);
    for (int i = 0; i < m; ++i) n_vec[i] = static_cast<double>(pop.domain_sizes()[i]);
    try {
        r.gvf = fit_gvf(r.psi_d, n_vec);
        r.psi_s = smooth(r.gvf, n_vec);
    } catch (const std::exception&) {
        // Too few usable direct variances; fall back to a flat function at the
        // mean positive value so the pipeline can still report flagged results.
        double acc = 0.0;
        int cnt = 0;
        for (int i = 0; i < m; ++i)
            if (std::isfinite(r.psi_d[i]) && r.psi_d[i] > 0.0) {
                acc += r.psi_d[i];
                ++cnt;
            }
        r.gvf = GVFModel{cnt ? acc / cnt : 1e-6, 0.0, cnt, 0.0, flags::Degenerate};
        r.psi_s = Eigen::VectorXd::Constant(m, r.gvf.K);
    }

    SyntheticResult syn;
    try {
        syn = family == Family::Area
                  ? regression_synthetic(r.direct, r.psi_s, aux.z)
                  : greg_synthetic(sample, pop, var, aux.theta_x, w_full);
    } catch (const std::exception&) {
        syn.estimates.resize(m);
        for (int i = 0; i < m; ++i) {
            syn.estimates[i].domain = i;
            syn.estimates[i].kind = family == Family::Area ? EstimatorKind::SyntheticReg
                                                           : EstimatorKind::SyntheticGreg;
            syn.estimates[i].flags = flags::Degenerate;
        }
    }
    r.synthetic = syn;

    const Eigen::VectorXd full_d = point_vector(r.direct);
    const Eigen::VectorXd full_s = point_vector(r.synthetic.estimates);

    // One replicate set for the whole pipeline: direct and synthetic parts are
    // re-estimated per replicate; smoothed variances and composition weights
    // stay fixed at their full-sample values.
    BootstrapRun run(sample, bspec);
    const int B = run.replicates();
    Eigen::MatrixXd reps_d(B, m), reps_s(B, m);
    for (int b = 0; b < B; ++b) {
        const Eigen::VectorXd wb = run.weights(b);
        const std::vector<DomainEstimate> db =
            direct_points(sample, pop, var, family, aux, wb);
        reps_d.row(b) = point_vector(db);
        reps_s.row(b) = synthetic_points(sample, pop, var, family, aux, r.psi_s, db, wb);
    }

    const BootstrapMoments s2s = replicate_variance(reps_s, full_s);
    r.sigma2_syn = s2s.value;
    for (int i = 0; i < m; ++i)
        r.synthetic.estimates[i].var_hat = s2s.value[i];

    r.comp1.resize(m);
    r.comp2.resize(m);
    Eigen::MatrixXd reps_c1(B, m), reps_c2(B, m);
    for (int i = 0; i < m; ++i) {
        const bool have_direct = !r.direct[i].empty() && std::isfinite(full_d[i]);
        double sig_s = s2s.value[i];
        unsigned extra = 0;
        if (!std::isfinite(sig_s) || sig_s < 0.0) {
            sig_s = 0.0;
            extra |= flags::Unreliable;
        }
        try {
            CompositeResult c1 =
                first_step(i, full_d[i], full_s[i], r.psi_s[i],
                           sig_s, std::numeric_limits<double>::quiet_NaN(), have_direct);
            c1.flags |= extra | (s2s.flags[i] & flags::Unreliable);
            for (int b = 0; b < B; ++b)
                reps_c1(b, i) = c1.lambda == 0.0
                                    ? reps_s(b, i)
                                    : c1.lambda * reps_d(b, i) +
                                          (1.0 - c1.lambda) * reps_s(b, i);
            r.comp1[i] = c1;
        } catch (const std::exception&) {
            r.comp1[i].domain = i;
            r.comp1[i].flags |= flags::Degenerate;
            reps_c1.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    }
    {
        Eigen::VectorXd full_c1(m);
        for (int i = 0; i < m; ++i) full_c1[i] = r.comp1[i].theta_c;
        const BootstrapMoments s2c1 = replicate_variance(reps_c1, full_c1);
        for (int i = 0; i < m; ++i) {
            if (std::isfinite(s2c1.value[i]) && std::isfinite(r.comp1[i].theta_c)) {
                finish_mse(r.comp1[i], std::max(0.0, s2c1.value[i]));
                r.comp1[i].flags |= (s2c1.flags[i] & flags::Unreliable);
            } else {
                r.comp1[i].flags |= flags::Unreliable;
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        try {
            CompositeResult c2 = second_step(r.comp1[i], full_d[i], r.psi_s[i],
                                             std::numeric_limits<double>::quiet_NaN());
            for (int b = 0; b < B; ++b)
                reps_c2(b, i) = c2.lambda == 0.0
                                    ? reps_c1(b, i)
                                    : c2.lambda * reps_d(b, i) +
                                          (1.0 - c2.lambda) * reps_c1(b, i);
            r.comp2[i] = c2;
        } catch (const std::exception&) {
            r.comp2[i].domain = i;
            r.comp2[i].flags |= flags::Degenerate;
            reps_c2.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    }
    {
        Eigen::VectorXd full_c2(m);
        for (int i = 0; i < m; ++i) full_c2[i] = r.comp2[i].theta_c;
        const BootstrapMoments s2c2 = replicate_variance(reps_c2, full_c2);
        for (int i = 0; i < m; ++i) {
            if (std::isfinite(s2c2.value[i]) && std::isfinite(r.comp2[i].theta_c)) {
                finish_mse(r.comp2[i], std::max(0.0, s2c2.value[i]));
                r.comp2[i].flags |= (s2c2.flags[i] & flags::Unreliable);
            } else {
                r.comp2[i].flags |= flags::Unreliable;
            }
        }
    }

    try {
        r.fh = fit_fh(full_d, r.psi_s, aux.z);
        r.eblup = eblup_fh(r.fh, full_d, aux.z);
        r.mse_eblup = mse_fh(r.fh, r.psi_s, aux.z);
    } catch (const std::exception&) {
        r.fh.flags |= flags::Degenerate;
        r.eblup.resize(m);
        for (int i = 0; i < m; ++i) {
            r.eblup[i].domain = i;
            r.eblup[i].kind = EstimatorKind::EblupFh;
            r.eblup[i].flags = flags::Degenerate;
        }
        r.mse_eblup = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Monte-Carlo driver

const std::vector<std::string>& estimator_ids() {
    static const std::vector<std::string> ids = {
        "direct",   "synthetic", "comp1",     "comp2",
        "eblup",    "mse_comp1", "mse_comp2", "mse_eblup"};
    return ids;
}

std::pair<double, double> rmse_ab(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw std::invalid_argument("rmse_ab: no realizations");
    double sq = 0.0, mean = 0.0;
    for (double v : estimates) {
        sq += (v - truth) * (v - truth);
        mean += v;
    }
    const double n = static_cast<double>(estimates.size());
    return {std::sqrt(sq / n), std::abs(mean / n - truth)};
}

std::vector<int> classify_domains(const Eigen::VectorXd& nbar,
                                  std::optional<std::pair<double, double>> cuts) {
    const int m = static_cast<int>(nbar.size());
    std::vector<int> cls(m);
    if (cuts) {
        for (int i = 0; i < m; ++i)
            cls[i] = nbar[i] < cuts->first ? 0 : (nbar[i] < cuts->second ? 1 : 2);
        return cls;
    }
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (nbar[a] != nbar[b]) return nbar[a] < nbar[b];
        return a < b;
    });
    const int base = m / 3, rem = m % 3;
    const int n_small = base + (rem > 0 ? 1 : 0);
    const int n_medium = base + (rem > 1 ? 1 : 0);
    for (int pos = 0; pos < m; ++pos)
        cls[order[pos]] = pos < n_small ? 0 : (pos < n_small + n_medium ? 1 : 2);
    return cls;
}

AccuracyReport run_monte_carlo(const SimulationConfig& cfg, const Population& pop,
                               const AreaAuxiliary& aux, const std::string& var) {
    const int m = pop.num_domains();
    const int R = cfg.replicates;
    const int E = static_cast<int>(estimator_ids().size());

    std::vector<Eigen::MatrixXd> values(
        E, Eigen::MatrixXd::Constant(R, m, std::numeric_limits<double>::quiet_NaN()));
    Eigen::MatrixXd n_i(R, m);

    auto worker = [&](int r) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
        SampleDraw sample =
            cfg.design.kind == DesignSpec::Kind::PpsHouseholds
                ? draw_pps_households(pop, cfg.design.sample_size, rng)
                : draw_srswor(pop, cfg.design.sample_size, rng);
        BootstrapSpec bs = cfg.bootstrap;
        bs.seed = derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
        PipelineResult res = run_pipeline(sample, pop, var, cfg.family, aux, bs);
        for (int i = 0; i < m; ++i) {
            n_i(r, i) = sample.domain_size(i);
            values[0](r, i) = res.direct[i].empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : res.direct[i].theta;
            values[1](r, i) = res.synthetic.estimates[i].theta;
            values[2](r, i) = res.comp1[i].theta_c;
            values[3](r, i) = res.comp2[i].theta_c;
            values[4](r, i) = res.eblup[i].theta;
            values[5](r, i) = res.comp1[i].mse_hat;
            values[6](r, i) = res.comp2[i].mse_hat;
            values[7](r, i) = res.mse_eblup[i];
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (int r = 0; r < R; ++r) worker(r);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (int r = t; r < R; r += threads) worker(r);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    AccuracyReport rep;
    rep.estimators = estimator_ids();
    rep.replicates = R;
    rep.truth.resize(m);
    rep.nbar = n_i.colwise().mean();
    for (int i = 0; i < m; ++i) {
        rep.domain_labels.push_back(pop.domain_label(i));
        rep.truth[i] = true_domain_mean(pop, var, i);
    }
    rep.size_class = classify_domains(rep.nbar, cfg.class_cuts);

    // Targets: true means for point estimators; Monte-Carlo MSE of the
    // matching point estimator for the MSE estimators.
    rep.target.resize(E, m);
    const int point_of_mse[] = {2, 3, 4};  // mse_comp1 -> comp1, ...
    for (int e = 0; e < E; ++e) {
        for (int i = 0; i < m; ++i) {
            if (e < 5) {
                rep.target(e, i) = rep.truth[i];
            } else {
                const Eigen::MatrixXd& pv = values[point_of_mse[e - 5]];
                double acc = 0.0;
                int used = 0;
                for (int r = 0; r < R; ++r) {
                    if (!std::isfinite(pv(r, i))) continue;
                    acc += (pv(r, i) - rep.truth[i]) * (pv(r, i) - rep.truth[i]);
                    ++used;
                }
                rep.target(e, i) = used ? acc / used
                                        : std::numeric_limits<double>::quiet_NaN();
            }
        }
    }

    rep.rmse.resize(E, m);
    rep.ab.resize(E, m);
    rep.failures = Eigen::MatrixXd::Zero(E, m);
    for (int e = 0; e < E; ++e) {
        for (int i = 0; i < m; ++i) {
            std::vector<double> vals;
            vals.reserve(R);
            for (int r = 0; r < R; ++r) {
                if (std::isfinite(values[e](r, i)))
                    vals.push_back(values[e](r, i));
                else
                    rep.failures(e, i) += 1.0;
            }
            if (vals.empty() || !std::isfinite(rep.target(e, i))) {
                rep.rmse(e, i) = rep.ab(e, i) = std::numeric_limits<double>::quiet_NaN();
            } else {
                std::tie(rep.rmse(e, i), rep.ab(e, i)) = rmse_ab(vals, rep.target(e, i));
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Tables and output

ClassTable class_averages(const AccuracyReport& report) {
    const int E = static_cast<int>(report.estimators.size());
    const int m = static_cast<int>(report.domain_labels.size());
    ClassTable t;
    t.estimators = report.estimators;
    t.rmse.resize(E, 4);
    t.ab.resize(E, 4);
    for (int e = 0; e < E; ++e) {
        for (int c = 0; c < 4; ++c) {
            double sr = 0.0, sa = 0.0;
            int used = 0;
            for (int i = 0; i < m; ++i) {
                if (c > 0 && report.size_class[i] != c - 1) continue;
                if (!std::isfinite(report.rmse(e, i))) continue;
                sr += report.rmse(e, i);
                sa += report.ab(e, i);
                ++used;
            }
            t.rmse(e, c) = used ? sr / used : std::numeric_limits<double>::quiet_NaN();
            t.ab(e, c) = used ? sa / used : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return t;
}

ClassTable relative_table(const ClassTable& averages, const std::string& benchmark,
                          const std::string& mse_benchmark) {
    const auto row_of = [&](const std::string& id) {
        for (std::size_t e = 0; e < averages.estimators.size(); ++e)
            if (averages.estimators[e] == id) return static_cast<int>(e);
        throw std::invalid_argument("unknown benchmark estimator: " + id);
    };
    const int bench_point = row_of(benchmark);
    const int bench_mse = row_of(mse_benchmark);

    ClassTable t = averages;
    const int E = static_cast<int>(averages.estimators.size());
    for (int e = 0; e < E; ++e) {
        const bool is_mse = averages.estimators[e].rfind("mse_", 0) == 0;
        const int b = is_mse ? bench_mse : bench_point;
        for (int c = 0; c < 4; ++c) {
            const double br = averages.rmse(b, c), ba = averages.ab(b, c);
            t.rmse(e, c) = br != 0.0 && std::isfinite(br)
                               ? averages.rmse(e, c) / br
                               : std::numeric_limits<double>::quiet_NaN();
            t.ab(e, c) = ba != 0.0 && std::isfinite(ba)
                             ? averages.ab(e, c) / ba
                             : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return t;
}

namespace {

const char* class_name(int c) {
    switch (c) {
        case 0: return "any";
        case 1: return "small";
        case 2: return "medium";
        default: return "large";
    }
}

void write_class_table(const std::string& path, const ClassTable& t) {
    std::ofstream out(path, std::ios::binary);
    out << "estimator,class,metric,value\n";
    for (std::size_t e = 0; e < t.estimators.size(); ++e) {
        for (int c = 0; c < 4; ++c) {
            out << csv::join({t.estimators[e], class_name(c), "rmse",
                              csv::format(t.rmse(static_cast<int>(e), c))});
            out << csv::join({t.estimators[e], class_name(c), "ab",
                              csv::format(t.ab(static_cast<int>(e), c))});
        }
    }
}

void write_per_domain(const std::string& path, const AccuracyReport& rep) {
    std::ofstream out(path, std::ios::binary);
    out << "domain_id,estimator,metric,value\n";
    const int E = static_cast<int>(rep.estimators.size());
    const int m = static_cast<int>(rep.domain_labels.size());
    for (int i = 0; i < m; ++i) {
        const std::string id = std::to_string(rep.domain_labels[i]);
        out << csv::join({id, "domain", "nbar", csv::format(rep.nbar[i])});
        out << csv::join({id, "domain", "class",
                          class_name(rep.size_class[i] + 1)});
        out << csv::join({id, "domain", "truth", csv::format(rep.truth[i])});
        for (int e = 0; e < E; ++e) {
            out << csv::join({id, rep.estimators[e], "rmse", csv::format(rep.rmse(e, i))});
            out << csv::join({id, rep.estimators[e], "ab", csv::format(rep.ab(e, i))});
            out << csv::join({id, rep.estimators[e], "target", csv::format(rep.target(e, i))});
            out << csv::join(
                {id, rep.estimators[e], "failures", csv::format(rep.failures(e, i))});
        }
    }
}

struct LoadedPopulation {
    Population pop;
    AreaAuxiliary aux;
};

LoadedPopulation load_population(const SimulationConfig& cfg) {
    Population pop = cfg.generator ? generate_population(*cfg.generator)
                                   : Population::from_units(read_units_csv(cfg.units_csv));
    AreaAuxiliary aux = domain_x_means(pop);
    if (!cfg.areas_csv.empty()) {
        AreaFile f = read_areas_csv(cfg.areas_csv);
        for (std::size_t r = 0; r < f.domain_labels.size(); ++r) {
            const int i = pop.domain_index(f.domain_labels[r]);
            if (f.z.cols() != aux.z.cols())
                throw std::runtime_error("area file auxiliary length mismatch");
            aux.z.row(i) = f.z.row(static_cast<int>(r));
        }
    }
    return {std::move(pop), std::move(aux)};
}

void write_manifest(const std::string& path, const SimulationConfig& cfg,
                    const Population& pop) {
    std::ofstream out(path, std::ios::binary);
    out << "tool = sae-toolkit\n";
    out << "seed = " << cfg.seed << "\n";
    out << "replicates = " << cfg.replicates << "\n";
    out << "bootstrap_B = " << cfg.bootstrap.B << "\n";
    out << "design = "
        << (cfg.design.kind == DesignSpec::Kind::PpsHouseholds ? "pps_households"
                                                               : "srswor_units")
        << "\n";
    out << "sample_size = " << cfg.design.sample_size << "\n";
    out << "family = " << (cfg.family == Family::Area ? "area" : "unit") << "\n";
    out << "population_size = " << pop.size() << "\n";
    out << "domains = " << pop.num_domains() << "\n";
}

}  // namespace

int run_simulate(const SimulationConfig& cfg) {
    LoadedPopulation lp = load_population(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    std::vector<std::string> vars =
        cfg.variables.empty() ? lp.pop.variables() : cfg.variables;
    for (const std::string& var : vars) {
        if (!lp.pop.has_variable(var))
            throw std::runtime_error("unknown study variable: " + var);
        AccuracyReport rep = run_monte_carlo(cfg, lp.pop, lp.aux, var);
        const ClassTable avg = class_averages(rep);
        const ClassTable rel = relative_table(avg, "eblup", "mse_eblup");
        const std::string base = cfg.out_dir + "/" + var;
        write_class_table(base + "_summary.csv", avg);
        write_class_table(base + "_relative.csv", rel);
        write_per_domain(base + "_per_domain.csv", rep);
    }
    write_manifest(cfg.out_dir + "/manifest.txt", cfg, lp.pop);
    return 0;
}

int run_estimate(const SimulationConfig& cfg) {
    LoadedPopulation lp = load_population(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    SampleDraw sample = cfg.design.kind == DesignSpec::Kind::PpsHouseholds
                            ? draw_pps_households(lp.pop, cfg.design.sample_size, rng)
                            : draw_srswor(lp.pop, cfg.design.sample_size, rng);
    BootstrapSpec bs = cfg.bootstrap;
    bs.seed = derive_seed(cfg.seed, 1);

    std::vector<std::string> vars =
        cfg.variables.empty() ? lp.pop.variables() : cfg.variables;
    for (const std::string& var : vars) {
        if (!lp.pop.has_variable(var))
            throw std::runtime_error("unknown study variable: " + var);
        PipelineResult res = run_pipeline(sample, lp.pop, var, cfg.family, lp.aux, bs);
        std::ofstream out(cfg.out_dir + "/estimate_" + var + ".csv", std::ios::binary);
        out << "domain_id,n_i,theta_d,psi_d,psi_s,theta_s,sigma2_s,lambda1,theta_c1,"
               "mse_c1,lambda2,theta_cb,mse_cb,eblup,mse_eblup,flags\n";
        for (int i = 0; i < lp.pop.num_domains(); ++i) {
            const unsigned fl = res.direct[i].flags | res.comp1[i].flags |
                                res.comp2[i].flags | res.eblup[i].flags;
            out << csv::join({std::to_string(lp.pop.domain_label(i)),
                              std::to_string(res.direct[i].n_i),
                              csv::format(res.direct[i].theta), csv::format(res.psi_d[i]),
                              csv::format(res.psi_s[i]),
                              csv::format(res.synthetic.estimates[i].theta),
                              csv::format(res.sigma2_syn[i]),
                              csv::format(res.comp1[i].lambda),
                              csv::format(res.comp1[i].theta_c),
                              csv::format(res.comp1[i].mse_hat),
                              csv::format(res.comp2[i].lambda),
                              csv::format(res.comp2[i].theta_c),
                              csv::format(res.comp2[i].mse_hat),
                              csv::format(res.eblup[i].theta),
                              csv::format(res.mse_eblup[i]), std::to_string(fl)});
        }
    }
    return 0;
}

}  // namespace sae
