#include "plf/driver.hpp"

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>

#include "plf/errors.hpp"
#include "plf/rng.hpp"
#include "plf/util.hpp"

namespace plf {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {
double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace

GammaPolicy gamma_policy_from_name(const std::string& s) {
    if (s == "recursive_doubling") return GammaPolicy::recursive_doubling;
    if (s == "zeta_scaled") return GammaPolicy::zeta_scaled;
    if (s == "eigenvalue_normalized") return GammaPolicy::eigenvalue_normalized;
    if (s == "explicit") return GammaPolicy::explicit_gamma;
    throw Error("SchemaViolation", "unknown gamma_policy '" + s + "'");
}

const char* gamma_policy_name(GammaPolicy p) {
    switch (p) {
        case GammaPolicy::recursive_doubling: return "recursive_doubling";
        case GammaPolicy::zeta_scaled: return "zeta_scaled";
        case GammaPolicy::eigenvalue_normalized: return "eigenvalue_normalized";
        default: return "explicit";
    }
}

PLFConfig parse_run_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw Error("SchemaViolation", std::string("run config: invalid JSON: ") + e.what());
    }
    static const std::vector<std::string> known = {
        "case", "uncertainty", "method", "rule", "grid", "l_max", "convention",
        "energy_fraction", "gamma_policy", "zeta", "gamma", "mc_samples", "seed",
        "pf", "diverged_fraction_max", "workers", "output_dir"};
    for (auto& [key, _] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error("SchemaViolation", "run config: unknown key '" + key + "'");

    PLFConfig c;
    if (!doc.contains("case")) throw Error("SchemaViolation", "run config: 'case' missing");
    c.case_ref = doc["case"].get<std::string>();
    if (!doc.contains("uncertainty"))
        throw Error("SchemaViolation", "run config: 'uncertainty' missing");
    c.uncertainty_ref = doc["uncertainty"].get<std::string>();

    const std::string method = doc.value("method", "collocation");
    if (method == "collocation") c.method = RunMethod::collocation;
    else if (method == "monte_carlo") c.method = RunMethod::monte_carlo;
    else throw Error("SchemaViolation", "run config: method must be collocation|monte_carlo");

    c.rule_kind = rule_from_name(doc.value("rule", "fejer2"));
    c.grid_kind = grid_kind_from_name(doc.value("grid", "anisotropic"));
    c.l_max = doc.value("l_max", 5);
    if (c.l_max < 1) throw Error("SchemaViolation", "run config: l_max must be >= 1");
    const std::string conv = doc.value("convention", "offset");
    if (conv == "offset") c.convention = LevelConvention::offset;
    else if (conv == "direct") c.convention = LevelConvention::direct;
    else throw Error("SchemaViolation", "run config: convention must be offset|direct");
    c.energy_fraction = doc.value("energy_fraction", 0.90);
    if (!(c.energy_fraction > 0 && c.energy_fraction <= 1))
        throw Error("SchemaViolation", "run config: energy_fraction must be in (0,1]");
    c.gamma_policy = gamma_policy_from_name(doc.value("gamma_policy", "recursive_doubling"));
    c.zeta = doc.value("zeta", 2.0);
    if (!(c.zeta >= 1.0)) throw Error("SchemaViolation", "run config: zeta must be >= 1");
    if (doc.contains("gamma")) c.explicit_gamma = doc["gamma"].get<std::vector<double>>();
    c.mc_samples = doc.value("mc_samples", 10000);
    if (c.mc_samples < 1) throw Error("SchemaViolation", "run config: mc_samples must be >= 1");
    c.seed = doc.value("seed", std::uint64_t{1});
    c.diverged_fraction_max = doc.value("diverged_fraction_max", 0.01);
    c.workers = doc.value("workers", 0);
    c.output_dir = doc.value("output_dir", "");

    if (doc.contains("pf")) {
        const auto& jp = doc["pf"];
        for (auto& [key, _] : jp.items())
            if (key != "tol" && key != "max_iter" && key != "enforce_q_limits" && key != "start")
                throw Error("SchemaViolation", "run config: pf: unknown key '" + key + "'");
        c.pf.tol = jp.value("tol", 1e-8);
        c.pf.max_iter = jp.value("max_iter", 30);
        c.pf.enforce_q_limits = jp.value("enforce_q_limits", false);
        const std::string start = jp.value("start", "flat");
        if (start == "flat") c.pf.start = StartMode::flat;
        else if (start == "from_case") c.pf.start = StartMode::from_case;
        else throw Error("SchemaViolation", "run config: pf.start must be flat|from_case");
    }
    return c;
}

std::string run_config_to_json(const PLFConfig& c) {
    json doc;
    doc["case"] = c.case_ref.string();
    doc["uncertainty"] = c.uncertainty_ref.string();
    doc["method"] = c.method == RunMethod::collocation ? "collocation" : "monte_carlo";
    doc["rule"] = rule_name(c.rule_kind);
    doc["grid"] = grid_kind_name(c.grid_kind);
    doc["l_max"] = c.l_max;
    doc["convention"] = c.convention == LevelConvention::offset ? "offset" : "direct";
    doc["energy_fraction"] = c.energy_fraction;
    doc["gamma_policy"] = gamma_policy_name(c.gamma_policy);
    doc["zeta"] = c.zeta;
    if (!c.explicit_gamma.empty()) doc["gamma"] = c.explicit_gamma;
    doc["mc_samples"] = c.mc_samples;
    doc["seed"] = c.seed;
    doc["pf"] = {{"tol", c.pf.tol},
                 {"max_iter", c.pf.max_iter},
                 {"enforce_q_limits", c.pf.enforce_q_limits},
                 {"start", c.pf.start == StartMode::flat ? "flat" : "from_case"}};
    doc["diverged_fraction_max"] = c.diverged_fraction_max;
    doc["workers"] = c.workers;
    return doc.dump(2) + "\n";
}

std::vector<Eigen::VectorXd> GlobalXiSpace::realize(std::span<const double> xi) const {
    if (static_cast<int>(xi.size()) != d_total)
        throw Error("XiOutOfRange", "global xi dimension mismatch");
    std::vector<Eigen::VectorXd> values;
    values.reserve(groups.size());
    for (const XiGroup& xg : groups)
        values.push_back(evaluate(xg.basis, xi.subspan(xg.offset, xg.basis.d)));
    return values;
}

std::string GlobalXiSpace::fingerprint_json() const {
    std::string all;
    for (const XiGroup& xg : groups) all += kl_basis_to_json(xg.basis);
    return all;
}

GlobalXiSpace build_xi_space_from_groups(std::vector<SourceGroup> groups, const PLFConfig& config) {
    if (groups.empty()) throw Error("SchemaViolation", "no source groups");
    GlobalXiSpace space;
    const auto t0 = Clock::now();
    int offset = 0;
    for (auto& g : groups) {
        XiGroup xg;
        xg.basis = truncate(decompose(g), config.energy_fraction);
        xg.group = std::move(g);
        xg.offset = offset;
        offset += xg.basis.d;
        space.groups.push_back(std::move(xg));
    }
    space.d_total = offset;
    space.t_eigenpairs = seconds_since(t0);

    space.gamma.gamma.clear();
    for (const XiGroup& xg : space.groups) {
        const int d = xg.basis.d;
        switch (config.gamma_policy) {
            case GammaPolicy::recursive_doubling:
                for (int n = 0; n < d; ++n)
                    space.gamma.gamma.push_back(std::ldexp(1.0, n));  // 1, 2, 4, ...
                break;
            case GammaPolicy::zeta_scaled: {
                double g = 1.0;
                for (int n = 0; n < d; ++n, g *= config.zeta) space.gamma.gamma.push_back(g);
                break;
            }
            case GammaPolicy::eigenvalue_normalized: {
                const double lam1 = xg.basis.eigenvalues[0];
                for (int n = 0; n < d; ++n) {
                    const double lam = xg.basis.eigenvalues[n];
                    double g = (lam > lam1 * 1e-12) ? lam1 / lam : 1e12;
                    space.gamma.gamma.push_back(std::min(g, 1e12));
                }
                break;
            }
            case GammaPolicy::explicit_gamma:
                break;  // filled below from the config
        }
    }
    if (config.gamma_policy == GammaPolicy::explicit_gamma) {
        if (static_cast<int>(config.explicit_gamma.size()) != space.d_total)
            throw Error("SchemaViolation",
                        "explicit gamma length " + std::to_string(config.explicit_gamma.size()) +
                            " does not match d_total " + std::to_string(space.d_total));
        space.gamma.gamma = config.explicit_gamma;
    }
    return space;
}

GlobalXiSpace build_xi_space(const PowerSystemCase& base, const std::vector<GroupSpec>& specs,
                             const PLFConfig& config, const std::filesystem::path& base_dir) {
    const auto t0 = Clock::now();
    std::vector<SourceGroup> groups;
    groups.reserve(specs.size());
    for (size_t i = 0; i < specs.size(); ++i)
        groups.push_back(build_group(base, specs[i], mix_seed(config.seed, 1000 + i), base_dir));
    GlobalXiSpace space = build_xi_space_from_groups(std::move(groups), config);
    space.t_eigenpairs = seconds_since(t0);
    return space;
}

std::vector<std::string> output_columns(const PowerSystemCase& sys) {
    std::vector<std::string> cols;
    for (const char* cls : {"v_mag", "v_ang", "p_inj", "q_inj"})
        for (const Bus& b : sys.buses) cols.push_back(std::string(cls) + ":" + std::to_string(b.id));
    for (const char* cls : {"p_flow", "q_flow"})
        for (size_t k = 0; k < sys.branches.size(); ++k)
            cols.push_back(std::string(cls) + ":" + std::to_string(sys.branches[k].from_bus) + "-" +
                           std::to_string(sys.branches[k].to_bus) + ":" + std::to_string(k));
    return cols;
}

std::pair<int, int> PLFResult::class_range(QuantityClass c) const {
    const int nb = n_bus, nbr = n_branch;
    switch (c) {
        case QuantityClass::v_mag: return {0, nb};
        case QuantityClass::v_ang: return {nb, 2 * nb};
        case QuantityClass::p_inj: return {2 * nb, 3 * nb};
        case QuantityClass::q_inj: return {3 * nb, 4 * nb};
        case QuantityClass::p_flow: return {4 * nb, 4 * nb + nbr};
        default: return {4 * nb + nbr, 4 * nb + 2 * nbr};
    }
}

namespace {

// Shared Steps 3-5: realize, solve, store, for a fixed xi matrix.
void run_pipeline(const PowerSystemCase& base, const GlobalXiSpace& space, const PLFConfig& config,
                  PLFResult& result) {
    const int n = static_cast<int>(result.xi.rows());
    const int nb = static_cast<int>(base.buses.size());
    const int nbr = static_cast<int>(base.branches.size());
    result.n_bus = nb;
    result.n_branch = nbr;
    result.columns = output_columns(base);
    const int q = static_cast<int>(result.columns.size());
    result.outputs.resize(n, q);
    result.records.assign(n, {});

    // Step 3 (timed as the KL phase): physical realizations at every point
    const auto t_kl0 = Clock::now();
    std::vector<std::vector<Eigen::VectorXd>> realizations(n);
    parallel_for(n, config.workers, [&](int i) {
        const Eigen::VectorXd row = result.xi.row(i);
        realizations[i] = space.realize(std::span<const double>(row.data(), row.size()));
    });
    result.timing.t_kl = seconds_since(t_kl0);

    // Steps 4-5: deterministic power flow per point
    std::vector<SourceGroup> groups;
    for (const XiGroup& xg : space.groups) groups.push_back(xg.group);
    std::vector<std::vector<ClampEvent>> clamp_logs(n);

    const auto t_pf0 = Clock::now();
    parallel_for(n, config.workers, [&](int i) {
        const PowerSystemCase realized =
            apply_realization(base, groups, realizations[i], &clamp_logs[i]);
        PowerFlowSolution sol;
        bool solver_failed = false;
        try {
            sol = solve_newton(realized, config.pf);
        } catch (const Error&) {
            solver_failed = true;  // singular Jacobian: treat as a diverged node
        }
        NodeRecord rec;
        rec.converged = !solver_failed && sol.converged;
        rec.iterations = sol.iterations;
        rec.max_mismatch = solver_failed ? std::numeric_limits<double>::infinity()
                                         : sol.max_mismatch;
        result.records[i] = rec;
        auto out = result.outputs.row(i);
        if (!rec.converged && solver_failed) {
            out.setZero();
            return;
        }
        out.segment(0, nb) = sol.v_mag;
        out.segment(nb, nb) = sol.v_ang;
        out.segment(2 * nb, nb) = sol.p_inj;
        out.segment(3 * nb, nb) = sol.q_inj;
        out.segment(4 * nb, nbr) = sol.p_from;
        out.segment(4 * nb + nbr, nbr) = sol.q_from;
    });
    result.timing.t_pf = seconds_since(t_pf0);

    for (int i = 0; i < n; ++i)
        for (const ClampEvent& ev : clamp_logs[i]) result.clamps.emplace_back(i, ev);

    result.n_diverged = 0;
    for (const NodeRecord& rec : result.records)
        if (!rec.converged) ++result.n_diverged;
    if (result.n_diverged > config.diverged_fraction_max * n)
        throw Error("TooManyDiverged", std::to_string(result.n_diverged) + " of " +
                                           std::to_string(n) + " power flows did not converge");
}

}  // namespace

PLFResult run_collocation(const PowerSystemCase& base, const GlobalXiSpace& space,
                          const PLFConfig& config) {
    const auto t0 = Clock::now();
    PLFResult result;
    result.method = RunMethod::collocation;
    result.timing.t_eigenpairs = space.t_eigenpairs;

    const auto t_grid0 = Clock::now();
    const int w = config.grid_kind == GridKind::tensor ? config.l_max : config.grid_w();
    result.grid = assemble(config.grid_kind, config.rule_kind, w, space.d_total,
                           config.grid_kind == GridKind::isotropic ? AnisoWeights{} : space.gamma,
                           config.l_max);
    result.timing.t_grid = seconds_since(t_grid0);

    const int n = result.grid.node_count();
    result.xi.resize(n, space.d_total);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < space.d_total; ++k) result.xi(i, k) = result.grid.nodes[i][k];

    run_pipeline(base, space, config, result);
    result.timing.t_total = space.t_eigenpairs + seconds_since(t0);
    return result;
}

PLFResult run_monte_carlo(const PowerSystemCase& base, const GlobalXiSpace& space,
                          const PLFConfig& config) {
    const auto t0 = Clock::now();
    PLFResult result;
    result.method = RunMethod::monte_carlo;
    result.timing.t_eigenpairs = space.t_eigenpairs;

    const int n = config.mc_samples;
    result.xi.resize(n, space.d_total);
    Rng rng(mix_seed(config.seed, 2));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < space.d_total; ++k) result.xi(i, k) = rng.uniform_sym();

    run_pipeline(base, space, config, result);
    result.timing.t_total = space.t_eigenpairs + seconds_since(t0);
    return result;
}

}  // namespace plf
