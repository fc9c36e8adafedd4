#include "sae/population.hpp"

#include "sae/csv.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace sae {

Population Population::from_units(std::vector<UnitRecord> records) {
    if (records.empty()) throw std::invalid_argument("population is empty");

    std::stable_sort(records.begin(), records.end(),
                     [](const UnitRecord& a, const UnitRecord& b) {
                         if (a.domain_id != b.domain_id) return a.domain_id < b.domain_id;
                         if (a.household_id != b.household_id)
                             return a.household_id < b.household_id;
                         return a.unit_id < b.unit_id;
                     });

    const std::size_t p_tail = records.front().x_tail.size();
    std::vector<std::string> var_names;
    for (const auto& [name, value] : records.front().y) var_names.push_back(name);

    // A household must lie within one domain.
    {
        std::map<long long, int> hh_domain;
        for (const auto& r : records) {
            auto [it, inserted] = hh_domain.emplace(r.household_id, r.domain_id);
            if (!inserted && it->second != r.domain_id)
                throw std::invalid_argument("household " + std::to_string(r.household_id) +
                                            " spans multiple domains");
        }
    }

    const int n = static_cast<int>(records.size());
    Population pop;
    pop.x_.resize(n, static_cast<int>(p_tail) + 1);
    pop.unit_ids_.resize(n);
    pop.domain_of_.resize(n);
    for (const auto& name : var_names) pop.y_[name] = Eigen::VectorXd(n);

    std::set<long long> seen_ids;
    int domain_idx = -1;
    int last_label = 0;
    long long last_hh = 0;
    for (int k = 0; k < n; ++k) {
        const UnitRecord& r = records[k];
        if (!seen_ids.insert(r.unit_id).second)
            throw std::invalid_argument("duplicate unit_id " + std::to_string(r.unit_id));
        if (r.x_tail.size() != p_tail)
            throw std::invalid_argument("inconsistent auxiliary vector length");
        if (r.y.size() != var_names.size())
            throw std::invalid_argument("inconsistent study variables");

        if (domain_idx < 0 || r.domain_id != last_label) {
            ++domain_idx;
            last_label = r.domain_id;
            pop.domain_labels_.push_back(r.domain_id);
            pop.domain_first_.push_back(k);
            pop.domain_sizes_.push_back(0);
        }
        ++pop.domain_sizes_.back();
        pop.domain_of_[k] = domain_idx;
        pop.unit_ids_[k] = r.unit_id;

        if (pop.households_.empty() || r.household_id != last_hh) {
            pop.households_.push_back({r.household_id, domain_idx, k, 0});
            last_hh = r.household_id;
        }
        ++pop.households_.back().size;

        pop.x_(k, 0) = 1.0;
        for (std::size_t j = 0; j < p_tail; ++j) pop.x_(k, j + 1) = r.x_tail[j];
        for (const auto& [name, value] : r.y) {
            auto it = pop.y_.find(name);
            if (it == pop.y_.end())
                throw std::invalid_argument("inconsistent study variable " + name);
            it->second[k] = value;
        }
    }
    return pop;
}

int Population::domain_index(int label) const {
    auto it = std::lower_bound(domain_labels_.begin(), domain_labels_.end(), label);
    if (it == domain_labels_.end() || *it != label)
        throw std::invalid_argument("unknown domain label " + std::to_string(label));
    return static_cast<int>(it - domain_labels_.begin());
}

const Eigen::VectorXd& Population::y(const std::string& var) const {
    auto it = y_.find(var);
    if (it == y_.end()) throw std::invalid_argument("unknown study variable " + var);
    return it->second;
}

std::vector<std::string> Population::variables() const {
    std::vector<std::string> out;
    for (const auto& [name, values] : y_) out.push_back(name);
    return out;
}

double true_domain_mean(const Population& pop, const std::string& var, int domain) {
    if (domain < 0 || domain >= pop.num_domains())
        throw std::invalid_argument("domain index out of range");
    const Eigen::VectorXd& y = pop.y(var);
    const long long n_i = pop.domain_sizes()[domain];
    if (n_i == 0) throw std::invalid_argument("empty domain");
    return y.segment(pop.domain_first(domain), n_i).mean();
}

AreaAuxiliary domain_x_means(const Population& pop) {
    const int m = pop.num_domains();
    AreaAuxiliary aux;
    aux.theta_x.resize(m, pop.num_aux());
    for (int i = 0; i < m; ++i) {
        aux.theta_x.row(i) =
            pop.x().middleRows(pop.domain_first(i), pop.domain_sizes()[i]).colwise().mean();
    }
    aux.z = aux.theta_x;
    return aux;
}

static long long round_half_even(double w) {
    // FE_TONEAREST is round-half-even.
    return static_cast<long long>(std::nearbyint(w));
}

Population synthesize_population(const std::vector<UnitRecord>& records,
                                 const SynthesisOptions& opts, SynthesisReport* report) {
    SynthesisReport local;
    SynthesisReport& rep = report ? *report : local;
    rep = SynthesisReport{};

    std::map<int, DomainSynthStats> stats;
    std::map<long long, long long> clone_count;  // per input household: max clones
    for (const auto& r : records) {
        if (r.weight <= 0.0)
            throw std::invalid_argument("non-positive survey weight for unit " +
                                        std::to_string(r.unit_id));
        const long long c = round_half_even(r.weight);
        if (c == 0) {
            ++rep.records_dropped_zero;
            continue;
        }
        auto& st = stats[r.domain_id];
        st.domain_label = r.domain_id;
        st.n_units += c;
        for (const auto& [name, value] : r.y) st.y_sum[name] += c * value;
        auto& hc = clone_count[r.household_id];
        hc = std::max(hc, c);
    }

    std::set<int> kept;
    for (const auto& [label, st] : stats) {
        if (!opts.keep_domain || opts.keep_domain(st))
            kept.insert(label);
        else
            rep.dropped_domains.push_back(label);
    }

    // Fresh household ids per clone: household h, clone c -> base + c where
    // bases are spaced by the clone count of each input household.
    std::map<long long, long long> hh_base;
    long long next_base = 0;
    for (const auto& [hh, count] : clone_count) {
        hh_base[hh] = next_base;
        next_base += count;
    }

    std::vector<UnitRecord> out;
    long long next_unit = 0;
    for (const auto& r : records) {
        if (kept.find(r.domain_id) == kept.end()) continue;
        const long long c = round_half_even(r.weight);
        for (long long j = 0; j < c; ++j) {
            UnitRecord u = r;
            u.unit_id = next_unit++;
            u.household_id = hh_base[r.household_id] + j;
            u.weight = 1.0;
            out.push_back(std::move(u));
            ++rep.total_clones;
        }
    }
    if (out.empty()) throw std::invalid_argument("synthesized population is empty");
    return Population::from_units(std::move(out));
}

std::vector<UnitRecord> read_units_csv(const std::string& path) {
    csv::Table t = csv::read(path);
    const auto& h = t.header;
    if (h.size() < 4 || h[0] != "unit_id" || h[1] != "household_id" ||
        h[2] != "domain_id" || h[3] != "weight")
        throw std::runtime_error("unit file must start with unit_id,household_id,domain_id,weight");

    std::vector<std::string> y_names;
    std::size_t col = 4;
    while (col < h.size() && h[col].rfind("y_", 0) == 0) {
        y_names.push_back(h[col].substr(2));
        ++col;
    }
    const std::size_t x_first = col;

    std::vector<UnitRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        UnitRecord r;
        r.unit_id = std::stoll(row[0]);
        r.household_id = std::stoll(row[1]);
        r.domain_id = std::stoi(row[2]);
        r.weight = std::stod(row[3]);
        for (std::size_t j = 0; j < y_names.size(); ++j)
            r.y.emplace_back(y_names[j], std::stod(row[4 + j]));
        for (std::size_t j = x_first; j < h.size(); ++j)
            r.x_tail.push_back(std::stod(row[j]));
        out.push_back(std::move(r));
    }
    return out;
}

AreaFile read_areas_csv(const std::string& path) {
    csv::Table t = csv::read(path);
    if (t.header.size() < 3 || t.header[0] != "domain_id" || t.header[1] != "N_i")
        throw std::runtime_error("area file must start with domain_id,N_i");
    AreaFile f;
    const int p = static_cast<int>(t.header.size()) - 2;
    f.z.resize(static_cast<int>(t.rows.size()), p);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        f.domain_labels.push_back(std::stoi(t.rows[i][0]));
        f.sizes.push_back(std::stoll(t.rows[i][1]));
        for (int j = 0; j < p; ++j) f.z(static_cast<int>(i), j) = std::stod(t.rows[i][2 + j]);
    }
    return f;
}

}  // namespace sae
