// plf: probabilistic load flow by KL-reduced anisotropic sparse-grid
// collocation, with a Monte Carlo baseline.
//
// Subcommands: grid | run | compare | zeta-sweep | case-info | kl-info

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "plf/driver.hpp"
#include "plf/errors.hpp"
#include "plf/kl.hpp"
#include "plf/report.hpp"
#include "plf/stats.hpp"
#include "plf/util.hpp"

namespace fs = std::filesystem;
using namespace plf;

namespace {

int env_workers() {
    const char* env = std::getenv("PLF_WORKERS");
    return env ? std::atoi(env) : 0;
}

std::vector<double> parse_gamma_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

void dump_grid(const SparseGrid& grid, const fs::path& dir) {
    fs::create_directories(dir);
    std::ostringstream nodes;
    for (int k = 0; k < grid.d; ++k) nodes << (k ? "," : "") << "n" << k;
    nodes << ",weight\n";
    for (int i = 0; i < grid.node_count(); ++i) {
        for (int k = 0; k < grid.d; ++k) nodes << (k ? "," : "") << fmt_double(grid.nodes[i][k]);
        nodes << "," << fmt_double(grid.weights[i]) << "\n";
    }
    write_file(dir / "nodes.csv", nodes.str());
    std::ostringstream terms;
    for (int k = 0; k < grid.d; ++k) terms << (k ? "," : "") << "i" << k;
    terms << ",coeff\n";
    for (const GridTerm& t : grid.terms) {
        for (size_t k = 0; k < t.index.size(); ++k) terms << (k ? "," : "") << t.index[k];
        terms << "," << t.coeff << "\n";
    }
    write_file(dir / "terms.csv", terms.str());
}

struct RunArtifacts {
    PLFConfig config;
    std::string config_bytes;
    PowerSystemCase sys;
    std::string case_bytes;
    GlobalXiSpace space;
};

RunArtifacts prepare(const fs::path& config_path) {
    RunArtifacts a;
    a.config_bytes = read_file(config_path);
    a.config = parse_run_config(a.config_bytes);
    const fs::path base_dir = config_path.parent_path();
    const fs::path case_path =
        a.config.case_ref.is_absolute() ? a.config.case_ref : base_dir / a.config.case_ref;
    a.case_bytes = read_file(case_path);
    a.sys = case_path.extension() == ".m" ? parse_matpower_case(a.case_bytes)
                                          : parse_structured_case(a.case_bytes);
    const fs::path unc_path = a.config.uncertainty_ref.is_absolute()
                                  ? a.config.uncertainty_ref
                                  : base_dir / a.config.uncertainty_ref;
    const auto specs = parse_uncertainty_config(read_file(unc_path), a.sys);
    a.space = build_xi_space(a.sys, specs, a.config, unc_path.parent_path());
    return a;
}

void print_timing(const PLFResult& r) {
    std::cout << "n_samples:    " << r.sample_count() << "\n"
              << "t_eigenpairs: " << r.timing.t_eigenpairs << " s\n"
              << "t_grid:       " << r.timing.t_grid << " s\n"
              << "t_kl:         " << r.timing.t_kl << " s\n"
              << "t_pf:         " << r.timing.t_pf << " s\n"
              << "total:        " << r.timing.t_total << " s\n";
    if (r.n_diverged > 0) std::cout << "diverged:     " << r.n_diverged << "\n";
}

PLFResult execute(const RunArtifacts& a) {
    return a.config.method == RunMethod::collocation ? run_collocation(a.sys, a.space, a.config)
                                                     : run_monte_carlo(a.sys, a.space, a.config);
}

void write_distribution_dumps(const LoadedRun& run, int column, double base_mva,
                              const ReportOptions& opt, const fs::path& dir,
                              const std::string& tag) {
    const std::vector<double> samples = column_samples(run, column, base_mva, opt);
    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const Histogram h = histogram(samples, lo, hi, opt.n_bins);
    std::ostringstream pdf;
    pdf << "value,density\n";
    for (size_t b = 0; b < h.density.size(); ++b)
        pdf << fmt_double(0.5 * (h.edges[b] + h.edges[b + 1])) << "," << fmt_double(h.density[b])
            << "\n";
    write_file(dir / ("pdf_" + tag + ".csv"), pdf.str());

    const Cdf c = empirical_cdf(samples);
    std::ostringstream cdf;
    cdf << "value,cumulative_probability\n";
    for (size_t i = 0; i < c.values.size(); ++i)
        cdf << fmt_double(c.values[i]) << "," << fmt_double(c.prob[i]) << "\n";
    write_file(dir / ("cdf_" + tag + ".csv"), cdf.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic load flow via KL + anisotropic sparse grid collocation"};
    app.require_subcommand(1);

    // ---- grid ----
    auto* grid_cmd = app.add_subcommand("grid", "generate a collocation grid and dump it");
    std::string g_kind = "isotropic", g_rule = "cc", g_gamma, g_out, g_conv = "offset";
    int g_d = 0, g_level = 0, g_w = -1, g_lmax = 0;
    double g_zeta = 0;
    grid_cmd->add_option("--kind", g_kind, "tensor|isotropic|anisotropic");
    grid_cmd->add_option("--rule", g_rule, "cc|f2");
    grid_cmd->add_option("--d", g_d, "dimension")->required();
    grid_cmd->add_option("--level", g_level, "tensor: per-dimension level");
    grid_cmd->add_option("--w", g_w, "sparse grid index w");
    grid_cmd->add_option("--l-max", g_lmax, "per-dimension level cap (w from convention)");
    grid_cmd->add_option("--convention", g_conv, "offset (w=l_max-1) | direct (w=l_max)");
    grid_cmd->add_option("--gamma", g_gamma, "comma-separated anisotropy weights");
    grid_cmd->add_option("--zeta", g_zeta, "gamma_n = zeta^(n-1)");
    grid_cmd->add_option("--out", g_out, "output directory for nodes.csv/terms.csv");

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "execute a PLF run from a config file");
    std::string r_config, r_out;
    int r_workers = -1;
    run_cmd->add_option("config", r_config, "run config JSON")->required();
    run_cmd->add_option("--out", r_out, "run directory (default: output_dir from config)");
    run_cmd->add_option("--workers", r_workers, "worker count (1 = serial); default PLF_WORKERS or all cores");

    // ---- compare ----
    auto* cmp_cmd = app.add_subcommand("compare", "compare runs against a reference run");
    std::vector<std::string> c_dirs;
    std::string c_out, c_quantity = "v_mag";
    int c_bus = -1, c_branch = -1, c_bins = 100, c_samples = 10000, c_workers = -1;
    std::uint64_t c_seed = 777;
    bool c_no_kld = false;
    cmp_cmd->add_option("runs", c_dirs, "run directories (first = reference)")->expected(-2);
    cmp_cmd->add_option("--out", c_out, "report directory")->required();
    cmp_cmd->add_option("--cdf-bus", c_bus, "bus id for CDF/PDF dump");
    cmp_cmd->add_option("--cdf-branch", c_branch, "branch index for CDF/PDF dump");
    cmp_cmd->add_option("--quantity", c_quantity, "v_mag|v_ang|p_inj|q_inj|p_flow|q_flow");
    cmp_cmd->add_option("--bins", c_bins, "histogram bins");
    cmp_cmd->add_option("--samples", c_samples, "interpolant samples for PDFs");
    cmp_cmd->add_option("--seed", c_seed, "sampling seed");
    cmp_cmd->add_option("--workers", c_workers, "worker count");
    cmp_cmd->add_flag("--no-kld", c_no_kld, "skip KLD estimation");

    // ---- zeta-sweep ----
    auto* zs_cmd = app.add_subcommand("zeta-sweep", "sweep the gamma scaling factor zeta");
    std::string z_config, z_zetas, z_out;
    int z_workers = -1;
    zs_cmd->add_option("config", z_config, "run config JSON (gamma_policy zeta_scaled)")->required();
    zs_cmd->add_option("--zetas", z_zetas, "comma-separated zeta values")->required();
    zs_cmd->add_option("--out", z_out, "output directory")->required();
    zs_cmd->add_option("--workers", z_workers, "worker count");

    // ---- case-info ----
    auto* ci_cmd = app.add_subcommand("case-info", "print case summary");
    std::string ci_case;
    ci_cmd->add_option("case", ci_case, "case file (.m or .json)")->required();

    // ---- kl-info ----
    auto* ki_cmd = app.add_subcommand("kl-info", "print per-group eigenvalue spectra");
    std::string ki_case, ki_unc;
    double ki_frac = 0.90;
    std::uint64_t ki_seed = 1;
    ki_cmd->add_option("--case", ki_case, "case file")->required();
    ki_cmd->add_option("--uncertainty", ki_unc, "uncertainty config")->required();
    ki_cmd->add_option("--energy-fraction", ki_frac, "truncation energy fraction");
    ki_cmd->add_option("--seed", ki_seed, "sampling seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*grid_cmd) {
            if (g_d < 1) throw Error("InvalidDimension", "--d must be >= 1");
            const GridKind kind = grid_kind_from_name(g_kind);
            const RuleKind rule = rule_from_name(g_rule);
            int w = 0;
            if (kind == GridKind::tensor) {
                if (g_level < 1) throw Error("InvalidLevel", "tensor grid needs --level >= 1");
                w = g_level;
            } else if (g_w >= 0) {
                w = g_w;
            } else if (g_lmax >= 1) {
                w = g_conv == "direct" ? g_lmax : g_lmax - 1;
            } else {
                throw Error("InvalidLevel", "need --w or --l-max");
            }
            AnisoWeights gamma;
            if (!g_gamma.empty()) gamma.gamma = parse_gamma_list(g_gamma);
            else if (g_zeta > 0) {
                double v = 1;
                for (int n = 0; n < g_d; ++n, v *= g_zeta) gamma.gamma.push_back(v);
            }
            const int cap = g_lmax >= 1 ? g_lmax : kNoLevelCap;
            const SparseGrid grid = assemble(kind, rule, w, g_d, gamma, cap);
            std::cout << grid.node_count() << "\n";
            if (!g_out.empty()) dump_grid(grid, g_out);
        } else if (*run_cmd) {
            RunArtifacts a = prepare(r_config);
            if (r_workers >= 0) a.config.workers = r_workers;
            else if (a.config.workers == 0) a.config.workers = env_workers();
            fs::path out = !r_out.empty() ? fs::path(r_out) : fs::path(a.config.output_dir);
            if (out.empty())
                throw Error("SchemaViolation", "run: --out or config output_dir is required");
            const PLFResult result = execute(a);
            save_run(out, a.config, a.config_bytes, a.space, result, a.case_bytes, a.sys.base_mva);
            std::cout << "run directory: " << out.string() << "\n";
            print_timing(result);
        } else if (*cmp_cmd) {
            ReportOptions opt;
            opt.n_bins = c_bins;
            opt.interp_samples = c_samples;
            opt.seed = c_seed;
            opt.workers = c_workers >= 0 ? c_workers : env_workers();
            opt.with_kld = !c_no_kld;
            const LoadedRun reference = load_run(c_dirs.front());
            std::vector<LoadedRun> others;
            for (size_t i = 1; i < c_dirs.size(); ++i) others.push_back(load_run(c_dirs[i]));
            const ComparisonReport report = build_report(reference, others, opt);
            fs::create_directories(c_out);
            write_file(fs::path(c_out) / "metrics.csv", report_metrics_csv(report));
            write_file(fs::path(c_out) / "timing.csv", report_timing_csv(report));
            std::cout << report_metrics_csv(report);

            if (c_bus >= 0 || c_branch >= 0) {
                const int id = c_bus >= 0 ? c_bus : c_branch;
                const int col = find_column(reference.result, c_quantity, id);
                write_distribution_dumps(reference, col, reference.base_mva, opt, c_out,
                                         "reference");
                for (size_t i = 0; i < others.size(); ++i)
                    write_distribution_dumps(others[i], col, others[i].base_mva, opt, c_out,
                                             "run" + std::to_string(i));
            }
        } else if (*zs_cmd) {
            const std::vector<double> zetas = parse_gamma_list(z_zetas);
            if (zetas.empty()) throw Error("SchemaViolation", "zeta list is empty");
            RunArtifacts base = prepare(z_config);
            if (base.config.gamma_policy != GammaPolicy::zeta_scaled)
                throw Error("SchemaViolation", "zeta-sweep requires gamma_policy zeta_scaled");
            if (z_workers >= 0) base.config.workers = z_workers;

            fs::create_directories(z_out);
            PLFConfig mc_config = base.config;
            mc_config.method = RunMethod::monte_carlo;
            const PLFResult mc = run_monte_carlo(base.sys, base.space, mc_config);
            save_run(fs::path(z_out) / "mc", mc_config, run_config_to_json(mc_config), base.space,
                     mc, base.case_bytes, base.sys.base_mva);
            const LoadedRun mc_run = load_run(fs::path(z_out) / "mc");

            std::ostringstream sweep;
            sweep << "zeta,n_nodes,t_total,kld_mean,eps_sigma_mean_pct\n";
            for (double zeta : zetas) {
                PLFConfig cfg = base.config;
                cfg.method = RunMethod::collocation;
                cfg.zeta = zeta;
                cfg.grid_kind = GridKind::anisotropic;
                std::ostringstream label;
                label << "zeta_" << zeta;
                try {
                    const GlobalXiSpace space = build_xi_space_from_groups(
                        [&] {
                            std::vector<SourceGroup> gs;
                            for (const auto& xg : base.space.groups) gs.push_back(xg.group);
                            return gs;
                        }(),
                        cfg);
                    const PLFResult res = run_collocation(base.sys, space, cfg);
                    const fs::path dir = fs::path(z_out) / label.str();
                    save_run(dir, cfg, run_config_to_json(cfg), space, res, base.case_bytes, base.sys.base_mva);
                    ReportOptions opt;
                    opt.workers = cfg.workers;
                    const ComparisonReport rep = build_report(mc_run, {load_run(dir)}, opt);
                    double kld_mean = 0, eps_sigma = 0;
                    for (const ClassMetrics& cm : rep.runs[1].classes) {
                        kld_mean += cm.kld_mean / 6.0;
                        eps_sigma += cm.eps_sigma_mean / 6.0;
                    }
                    sweep << fmt_double(zeta) << "," << res.sample_count() << ","
                          << fmt_double(res.timing.t_total) << "," << fmt_double(kld_mean) << ","
                          << fmt_double(eps_sigma) << "\n";
                } catch (const Error& e) {
                    sweep << fmt_double(zeta) << ",error:" << e.code() << ",,,\n";
                }
            }
            write_file(fs::path(z_out) / "sweep.csv", sweep.str());
            std::cout << sweep.str();
        } else if (*ci_cmd) {
            const PowerSystemCase sys = load_case(ci_case);
            int in_service_gens = 0, slack_id = 0;
            double pd = 0, qd = 0, pg = 0;
            for (const Generator& g : sys.generators)
                if (g.in_service) {
                    ++in_service_gens;
                    pg += g.p_set;
                }
            for (const Bus& b : sys.buses) {
                pd += b.p_demand;
                qd += b.q_demand;
                if (b.bus_type == BusType::slack) slack_id = b.id;
            }
            std::cout << "buses: " << sys.buses.size() << "\n"
                      << "branches: " << sys.branches.size() << "\n"
                      << "generators: " << sys.generators.size() << " (" << in_service_gens
                      << " in service)\n"
                      << "base_mva: " << sys.base_mva << "\n"
                      << "slack bus: " << slack_id << "\n"
                      << "total load: " << pd * sys.base_mva << " MW, " << qd * sys.base_mva
                      << " MVAr\n"
                      << "scheduled generation: " << pg * sys.base_mva << " MW\n";
        } else if (*ki_cmd) {
            const PowerSystemCase sys = load_case(ki_case);
            const auto specs = parse_uncertainty_config(read_file(ki_unc), sys);
            int total_d = 0, total_m = 0;
            for (size_t i = 0; i < specs.size(); ++i) {
                const SourceGroup g = build_group(sys, specs[i], mix_seed(ki_seed, 1000 + i),
                                                  fs::path(ki_unc).parent_path());
                const KLBasis basis = truncate(decompose(g), ki_frac);
                std::cout << "group " << g.name << ": m=" << basis.full_dim() << " d=" << basis.d
                          << " captured=" << variance_captured(basis) << "\n  eigenvalues:";
                for (int n = 0; n < std::min(basis.full_dim(), 10); ++n)
                    std::cout << " " << basis.eigenvalues[n];
                if (basis.full_dim() > 10) std::cout << " ...";
                std::cout << "\n";
                total_d += basis.d;
                total_m += basis.full_dim();
            }
            std::cout << "d_total: " << total_d << " (of " << total_m << ")\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unexpected: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
