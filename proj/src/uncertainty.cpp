#include "plf/uncertainty.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "plf/errors.hpp"
#include "plf/rng.hpp"
#include "plf/util.hpp"

namespace plf {

using json = nlohmann::ordered_json;

double binomial_unit_capacity(double base_p_set, int n_units, double outage_rate) {
    return base_p_set / (n_units * (1.0 - outage_rate));
}

namespace {

double base_value(const PowerSystemCase& sys, const RandomSource& s) {
    const int bi = sys.bus_index(s.bus);
    switch (s.quantity) {
        case TargetQuantity::p_demand: return sys.buses[bi].p_demand;
        case TargetQuantity::q_demand: return sys.buses[bi].q_demand;
        case TargetQuantity::p_gen: {
            double p = 0;
            bool found = false;
            for (const Generator& g : sys.generators)
                if (g.bus == s.bus && g.in_service) {
                    p += g.p_set;
                    found = true;
                }
            if (!found)
                throw Error("TargetResolutionFailed",
                            "source '" + s.id + "': no in-service generator at bus " +
                                std::to_string(s.bus));
            return p;
        }
    }
    throw Error("TargetResolutionFailed", "source '" + s.id + "': bad quantity");
}

void check_source(const RandomSource& s) {
    if (s.kind == SourceKind::normal_load && s.sigma_fraction < 0)
        throw Error("SchemaViolation", "source '" + s.id + "': sigma_fraction must be >= 0");
    if (s.kind == SourceKind::binomial_generation) {
        if (s.n_units < 1)
            throw Error("SchemaViolation", "source '" + s.id + "': n_units must be >= 1");
        if (s.outage_rate < 0 || s.outage_rate > 1)
            throw Error("SchemaViolation", "source '" + s.id + "': outage_rate must be in [0,1]");
    }
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

SourceGroup build_group_from_distributions(const PowerSystemCase& base, const std::string& name,
                                           std::vector<RandomSource> sources, int n_samples,
                                           std::uint64_t seed,
                                           const std::optional<Eigen::MatrixXd>& correlation) {
    const int m = static_cast<int>(sources.size());
    if (m == 0) throw Error("SchemaViolation", "group '" + name + "' has no sources");
    if (n_samples < 2) throw Error("SchemaViolation", "group '" + name + "': n_samples must be >= 2");

    std::vector<double> base_vals(m);
    bool any_variance = false;
    for (int j = 0; j < m; ++j) {
        const RandomSource& s = sources[j];
        check_source(s);
        if (s.kind == SourceKind::empirical_series)
            throw Error("SchemaViolation",
                        "group '" + name + "': empirical sources need build_group_from_series");
        base_vals[j] = base_value(base, s);
        if (s.kind == SourceKind::normal_load && s.sigma_fraction * base_vals[j] != 0)
            any_variance = true;
        if (s.kind == SourceKind::binomial_generation && base_vals[j] != 0 && s.outage_rate > 0 &&
            s.outage_rate < 1)
            any_variance = true;
    }
    if (!any_variance) throw Error("DegenerateGroup", "group '" + name + "': all variances are zero");

    Eigen::MatrixXd corr_sqrt;
    if (correlation) {
        for (const RandomSource& s : sources)
            if (s.kind != SourceKind::normal_load)
                throw Error("SchemaViolation",
                            "group '" + name + "': correlation matrix requires all-normal sources");
        if (correlation->rows() != m || correlation->cols() != m)
            throw Error("SchemaViolation", "group '" + name + "': correlation matrix size mismatch");
        corr_sqrt = symmetric_sqrt(*correlation);
    }

    Rng rng(seed);
    Eigen::MatrixXd samples(n_samples, m);
    Eigen::VectorXd z(m);
    for (int t = 0; t < n_samples; ++t) {
        if (correlation) {
            for (int j = 0; j < m; ++j) z[j] = rng.normal();
            z = corr_sqrt * z;
            for (int j = 0; j < m; ++j)
                samples(t, j) = base_vals[j] * (1.0 + sources[j].sigma_fraction * z[j]);
        } else {
            for (int j = 0; j < m; ++j) {
                const RandomSource& s = sources[j];
                if (s.kind == SourceKind::normal_load) {
                    samples(t, j) = base_vals[j] * (1.0 + s.sigma_fraction * rng.normal());
                } else {
                    const double cap = binomial_unit_capacity(base_vals[j], s.n_units, s.outage_rate);
                    samples(t, j) = cap * rng.binomial(s.n_units, 1.0 - s.outage_rate);
                }
            }
        }
    }

    SourceGroup g;
    g.name = name;
    g.sources = std::move(sources);
    g.seed = seed;
    g.mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
    g.covariance = centered.transpose() * centered / (n_samples - 1.0);
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
    return g;
}

SeriesTable read_series_csv(const std::string& text, double base_mva) {
    std::istringstream in(text);
    std::string line;
    SeriesTable table;
    if (!std::getline(in, line)) throw Error("LengthMismatch", "series CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.columns.push_back(cell);
    if (table.columns.empty()) throw Error("LengthMismatch", "series CSV has no columns");

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream rs(line);
        std::vector<double> row;
        while (std::getline(rs, cell, ',')) {
            if (cell.empty())
                throw Error("LengthMismatch", "series CSV: empty cell at line " + std::to_string(lineno));
            row.push_back(std::stod(cell) / base_mva);
        }
        if (row.size() != table.columns.size())
            throw Error("LengthMismatch", "series CSV: wrong cell count at line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw Error("LengthMismatch", "series CSV needs at least 2 data rows");
    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.columns.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

SourceGroup build_group_from_series(const SeriesTable& table, const std::string& name,
                                    std::vector<RandomSource> sources) {
    const int m = static_cast<int>(sources.size());
    if (m == 0) throw Error("SchemaViolation", "group '" + name + "' has no sources");
    Eigen::MatrixXd data(table.values.rows(), m);
    for (int j = 0; j < m; ++j) {
        const RandomSource& s = sources[j];
        if (s.kind != SourceKind::empirical_series)
            throw Error("SchemaViolation", "group '" + name + "': source '" + s.id + "' is not empirical");
        auto it = std::find(table.columns.begin(), table.columns.end(), s.column);
        if (it == table.columns.end())
            throw Error("ColumnMissing", "series column '" + s.column + "' not found");
        data.col(j) = table.values.col(it - table.columns.begin());
    }
    SourceGroup g;
    g.name = name;
    g.sources = std::move(sources);
    g.mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - g.mean.transpose();
    g.covariance = centered.transpose() * centered / (data.rows() - 1.0);
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
    return g;
}

PowerSystemCase apply_realization(const PowerSystemCase& base,
                                  const std::vector<SourceGroup>& groups,
                                  const std::vector<Eigen::VectorXd>& values,
                                  std::vector<ClampEvent>* clamp_log) {
    if (groups.size() != values.size())
        throw Error("TargetResolutionFailed", "group/value count mismatch");
    PowerSystemCase out = base;
    const auto idx = base.bus_index_map();

    for (size_t gi = 0; gi < groups.size(); ++gi) {
        const SourceGroup& g = groups[gi];
        const Eigen::VectorXd& v = values[gi];
        if (v.size() != static_cast<Eigen::Index>(g.sources.size()))
            throw Error("TargetResolutionFailed",
                        "group '" + g.name + "': value vector length mismatch");
        for (size_t j = 0; j < g.sources.size(); ++j) {
            const RandomSource& s = g.sources[j];
            auto bit = idx.find(s.bus);
            if (bit == idx.end())
                throw Error("TargetResolutionFailed",
                            "source '" + s.id + "': bus " + std::to_string(s.bus) + " not found");
            const int bi = bit->second;
            double val = v[static_cast<Eigen::Index>(j)];
            double lo = 0.0, hi = std::numeric_limits<double>::infinity();
            if (s.kind == SourceKind::binomial_generation) {
                const double cap =
                    binomial_unit_capacity(base_value(base, s), s.n_units, s.outage_rate);
                hi = s.n_units * cap;
            }
            if (val < lo || val > hi) {
                const double applied = std::clamp(val, lo, hi);
                if (clamp_log) clamp_log->push_back({s.id, val, applied});
                val = applied;
            }
            switch (s.quantity) {
                case TargetQuantity::p_demand: {
                    Bus& b = out.buses[bi];
                    const double p_base = base.buses[bi].p_demand;
                    bool has_q_source = false;
                    for (const SourceGroup& og : groups)
                        for (const RandomSource& os : og.sources)
                            if (os.bus == s.bus && os.quantity == TargetQuantity::q_demand)
                                has_q_source = true;
                    b.p_demand = val;
                    if (s.couple_q && !has_q_source && p_base != 0.0)
                        b.q_demand = base.buses[bi].q_demand * (val / p_base);
                    break;
                }
                case TargetQuantity::q_demand:
                    out.buses[bi].q_demand = val;
                    break;
                case TargetQuantity::p_gen: {
                    // distribute over in-service units proportionally to base p_set
                    double total = 0;
                    int count = 0;
                    for (const Generator& gen : base.generators)
                        if (gen.bus == s.bus && gen.in_service) {
                            total += gen.p_set;
                            ++count;
                        }
                    if (count == 0)
                        throw Error("TargetResolutionFailed",
                                    "source '" + s.id + "': no in-service generator at bus " +
                                        std::to_string(s.bus));
                    for (size_t k = 0; k < out.generators.size(); ++k) {
                        Generator& gen = out.generators[k];
                        if (gen.bus != s.bus || !gen.in_service) continue;
                        const double share =
                            total != 0.0 ? base.generators[k].p_set / total : 1.0 / count;
                        gen.p_set = val * share;
                    }
                    break;
                }
            }
        }
    }
    return out;
}

namespace {

TargetQuantity quantity_from_name(const std::string& s) {
    if (s == "p_demand") return TargetQuantity::p_demand;
    if (s == "q_demand") return TargetQuantity::q_demand;
    if (s == "p_gen") return TargetQuantity::p_gen;
    throw Error("SchemaViolation", "unknown target quantity '" + s + "'");
}

SourceKind kind_from_name(const std::string& s) {
    if (s == "normal_load") return SourceKind::normal_load;
    if (s == "binomial_generation") return SourceKind::binomial_generation;
    if (s == "empirical_series") return SourceKind::empirical_series;
    throw Error("SchemaViolation", "unknown source kind '" + s + "'");
}

}  // namespace

std::vector<GroupSpec> ieee118_morales_preset(const PowerSystemCase& base) {
    std::vector<GroupSpec> specs;

    GroupSpec gen_spec;
    gen_spec.name = "generation";
    for (const Generator& g : base.generators) {
        if (!g.in_service) continue;
        RandomSource s;
        s.id = "gen" + std::to_string(g.bus);
        s.kind = SourceKind::binomial_generation;
        s.bus = g.bus;
        s.quantity = TargetQuantity::p_gen;
        s.n_units = 4;
        s.outage_rate = 0.09;
        gen_spec.sources.push_back(s);
    }
    specs.push_back(std::move(gen_spec));

    // Sigma schedule by bus range: 7% (1-33), 4% (34-59), 9% (60-79), 5% (80-118).
    // Loads share an exponential spatial correlation over bus index with
    // length 60; reactive demand follows active demand (constant power factor).
    GroupSpec load_spec;
    load_spec.name = "load";
    std::vector<double> pos;
    for (const Bus& b : base.buses) {
        if (b.p_demand <= 0) continue;
        RandomSource s;
        s.id = "load" + std::to_string(b.id);
        s.kind = SourceKind::normal_load;
        s.bus = b.id;
        s.quantity = TargetQuantity::p_demand;
        s.sigma_fraction = b.id <= 33 ? 0.07 : b.id <= 59 ? 0.04 : b.id <= 79 ? 0.09 : 0.05;
        s.couple_q = true;
        load_spec.sources.push_back(s);
        pos.push_back(static_cast<double>(b.id));
    }
    const int m = static_cast<int>(pos.size());
    Eigen::MatrixXd corr(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) corr(i, j) = std::exp(-std::abs(pos[i] - pos[j]) / 60.0);
    load_spec.correlation = corr;
    specs.push_back(std::move(load_spec));
    return specs;
}

std::vector<GroupSpec> parse_uncertainty_config(const std::string& text,
                                                const PowerSystemCase& base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw Error("SchemaViolation", std::string("uncertainty config: invalid JSON: ") + e.what());
    }
    for (auto& [key, _] : doc.items())
        if (key != "preset" && key != "groups")
            throw Error("SchemaViolation", "uncertainty config: unknown key '" + key + "'");

    if (doc.contains("preset")) {
        const std::string preset = doc["preset"].get<std::string>();
        if (preset == "ieee118-morales") return ieee118_morales_preset(base);
        throw Error("SchemaViolation", "unknown preset '" + preset + "'");
    }
    if (!doc.contains("groups") || !doc["groups"].is_array() || doc["groups"].empty())
        throw Error("SchemaViolation", "uncertainty config: groups: missing or empty");

    std::vector<GroupSpec> specs;
    int gi = 0;
    for (const auto& jg : doc["groups"]) {
        const std::string gpath = "groups[" + std::to_string(gi++) + "]";
        for (auto& [key, _] : jg.items())
            if (key != "name" && key != "sources" && key != "n_samples" && key != "seed" &&
                key != "correlation" && key != "dataset")
                throw Error("SchemaViolation", gpath + ": unknown key '" + key + "'");
        GroupSpec spec;
        spec.name = jg.value("name", "group" + std::to_string(gi));
        spec.n_samples = jg.value("n_samples", 10000);
        spec.seed = jg.value("seed", std::uint64_t{0});
        spec.dataset = jg.value("dataset", "");
        if (!jg.contains("sources") || !jg["sources"].is_array() || jg["sources"].empty())
            throw Error("SchemaViolation", gpath + ".sources: missing or empty");
        int si = 0;
        for (const auto& js : jg["sources"]) {
            const std::string spath = gpath + ".sources[" + std::to_string(si++) + "]";
            RandomSource s;
            s.id = js.value("id", spec.name + "#" + std::to_string(si));
            if (!js.contains("kind")) throw Error("SchemaViolation", spath + ".kind: missing");
            s.kind = kind_from_name(js["kind"].get<std::string>());
            if (!js.contains("bus")) throw Error("SchemaViolation", spath + ".bus: missing");
            s.bus = js["bus"].get<int>();
            if (!js.contains("quantity")) throw Error("SchemaViolation", spath + ".quantity: missing");
            s.quantity = quantity_from_name(js["quantity"].get<std::string>());
            s.sigma_fraction = js.value("sigma_fraction", 0.0);
            s.n_units = js.value("n_units", 4);
            s.outage_rate = js.value("outage_rate", 0.0);
            s.column = js.value("column", "");
            s.couple_q = js.value("couple_q", true);
            check_source(s);
            if (base.bus_index_map().find(s.bus) == base.bus_index_map().end())
                throw Error("SchemaViolation",
                            spath + ": bus " + std::to_string(s.bus) + " not in case");
            spec.sources.push_back(std::move(s));
        }
        if (jg.contains("correlation")) {
            const auto& jc = jg["correlation"];
            const int m = static_cast<int>(spec.sources.size());
            if (!jc.is_array() || static_cast<int>(jc.size()) != m)
                throw Error("SchemaViolation", gpath + ".correlation: wrong size");
            Eigen::MatrixXd corr(m, m);
            for (int i = 0; i < m; ++i) {
                if (static_cast<int>(jc[i].size()) != m)
                    throw Error("SchemaViolation", gpath + ".correlation: wrong row size");
                for (int j = 0; j < m; ++j) corr(i, j) = jc[i][j].get<double>();
            }
            spec.correlation = corr;
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

SourceGroup build_group(const PowerSystemCase& base, const GroupSpec& spec,
                        std::uint64_t derived_seed, const std::filesystem::path& base_dir) {
    const bool empirical = !spec.sources.empty() &&
                           spec.sources.front().kind == SourceKind::empirical_series;
    if (empirical) {
        if (spec.dataset.empty())
            throw Error("SchemaViolation", "group '" + spec.name + "': dataset path missing");
        const SeriesTable table = read_series_csv(read_file(base_dir / spec.dataset), base.base_mva);
        return build_group_from_series(table, spec.name, spec.sources);
    }
    const std::uint64_t seed = spec.seed != 0 ? spec.seed : derived_seed;
    return build_group_from_distributions(base, spec.name, spec.sources, spec.n_samples, seed,
                                          spec.correlation);
}

}  // namespace plf
