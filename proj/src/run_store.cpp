#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "plf/driver.hpp"
#include "plf/errors.hpp"
#include "plf/util.hpp"

namespace plf {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_outputs_bin(const fs::path& path, const std::vector<std::string>& columns,
                       const Eigen::MatrixXd& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("FileWriteFailed", "cannot write " + path.string());
    out.write("PLFB", 4);
    const std::uint32_t version = 1;
    const std::uint64_t n_rows = static_cast<std::uint64_t>(rows.rows());
    const std::uint64_t n_cols = static_cast<std::uint64_t>(rows.cols());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n_rows), 8);
    out.write(reinterpret_cast<const char*>(&n_cols), 8);
    const std::uint32_t nc = static_cast<std::uint32_t>(columns.size());
    out.write(reinterpret_cast<const char*>(&nc), 4);
    for (const std::string& name : columns) {
        const std::uint16_t len = static_cast<std::uint16_t>(name.size());
        out.write(reinterpret_cast<const char*>(&len), 2);
        out.write(name.data(), len);
    }
    std::vector<double> row(rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) row[static_cast<size_t>(j)] = rows(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_outputs_bin(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "PLFB", 4) != 0)
        throw Error("MalformedRow", path.string() + ": bad magic");
    std::uint32_t version = 0, nc = 0;
    std::uint64_t n_rows = 0, n_cols = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&n_rows), 8);
    in.read(reinterpret_cast<char*>(&n_cols), 8);
    in.read(reinterpret_cast<char*>(&nc), 4);
    if (version != 1 || nc != n_cols)
        throw Error("MalformedRow", path.string() + ": bad header");
    std::vector<std::string> columns(nc);
    for (auto& name : columns) {
        std::uint16_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 2);
        name.resize(len);
        in.read(name.data(), len);
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    std::vector<double> buf(n_cols);
    for (std::uint64_t i = 0; i < n_rows; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n_cols * sizeof(double)));
        for (std::uint64_t j = 0; j < n_cols; ++j)
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
    }
    if (!in) throw Error("MalformedRow", path.string() + ": truncated");
    return {std::move(columns), std::move(rows)};
}

namespace {

std::string xi_csv(const Eigen::MatrixXd& xi, const std::vector<double>* weights) {
    std::ostringstream out;
    for (int k = 0; k < xi.cols(); ++k) out << (k ? "," : "") << "n" << k;
    if (weights) out << ",weight";
    out << "\n";
    for (Eigen::Index i = 0; i < xi.rows(); ++i) {
        for (Eigen::Index k = 0; k < xi.cols(); ++k)
            out << (k ? "," : "") << fmt_double(xi(i, k));
        if (weights) out << "," << fmt_double((*weights)[static_cast<size_t>(i)]);
        out << "\n";
    }
    return out.str();
}

}  // namespace

void save_run(const fs::path& dir, const PLFConfig& config, const std::string& config_bytes,
              const GlobalXiSpace& space, const PLFResult& result, const std::string& case_bytes,
              double base_mva) {
    fs::create_directories(dir);
    write_file(dir / "INCOMPLETE", "run in progress\n");

    write_file(dir / "config.json", config_bytes);

    json meta;
    meta["format_version"] = 1;
    meta["method"] = result.method == RunMethod::collocation ? "collocation" : "monte_carlo";
    meta["case"] = config.case_ref.string();
    meta["case_hash"] = fnv1a(case_bytes);
    meta["base_mva"] = base_mva;
    meta["xi_fingerprint"] = fnv1a(space.fingerprint_json());
    meta["d_total"] = space.d_total;
    meta["rule"] = rule_name(config.rule_kind);
    meta["grid"] = grid_kind_name(config.grid_kind);
    meta["l_max"] = config.l_max;
    meta["convention"] = config.convention == LevelConvention::offset ? "offset" : "direct";
    meta["gamma"] = space.gamma.gamma;
    meta["seed"] = config.seed;
    meta["mc_samples"] = config.mc_samples;
    meta["n_bus"] = result.n_bus;
    meta["n_branch"] = result.n_branch;
    meta["n_points"] = result.sample_count();
    meta["n_diverged"] = result.n_diverged;
    json groups = json::array();
    for (const XiGroup& xg : space.groups)
        groups.push_back({{"name", xg.group.name},
                          {"m", xg.basis.full_dim()},
                          {"d", xg.basis.d},
                          {"offset", xg.offset},
                          {"seed", xg.group.seed}});
    meta["groups"] = std::move(groups);
    write_file(dir / "meta.json", meta.dump(2) + "\n");

    json bases = json::array();
    for (const XiGroup& xg : space.groups) bases.push_back(json::parse(kl_basis_to_json(xg.basis)));
    write_file(dir / "kl_bases.json", bases.dump(2) + "\n");

    if (result.method == RunMethod::collocation) {
        write_file(dir / "grid_nodes.csv", xi_csv(result.xi, &result.grid.weights));
        std::ostringstream terms;
        for (int k = 0; k < result.grid.d; ++k) terms << (k ? "," : "") << "i" << k;
        terms << ",coeff\n";
        for (const GridTerm& t : result.grid.terms) {
            for (size_t k = 0; k < t.index.size(); ++k) terms << (k ? "," : "") << t.index[k];
            terms << "," << t.coeff << "\n";
        }
        write_file(dir / "grid_terms.csv", terms.str());
    } else {
        write_file(dir / "mc_samples.csv", xi_csv(result.xi, nullptr));
    }

    write_outputs_bin(dir / "outputs.bin", result.columns, result.outputs);

    std::ostringstream conv;
    conv << "point,converged,iterations,max_mismatch\n";
    for (size_t i = 0; i < result.records.size(); ++i)
        conv << i << "," << (result.records[i].converged ? 1 : 0) << ","
             << result.records[i].iterations << "," << fmt_double(result.records[i].max_mismatch)
             << "\n";
    write_file(dir / "convergence.csv", conv.str());

    std::ostringstream clamps;
    clamps << "point,source,requested,applied\n";
    for (const auto& [node, ev] : result.clamps)
        clamps << node << "," << ev.source_id << "," << fmt_double(ev.requested) << ","
               << fmt_double(ev.applied) << "\n";
    write_file(dir / "clamps.csv", clamps.str());

    json timing;
    timing["t_eigenpairs"] = result.timing.t_eigenpairs;
    timing["t_grid"] = result.timing.t_grid;
    timing["t_kl"] = result.timing.t_kl;
    timing["t_pf"] = result.timing.t_pf;
    timing["t_total"] = result.timing.t_total;
    timing["n_points"] = result.sample_count();
    write_file(dir / "timing.json", timing.dump(2) + "\n");

    fs::remove(dir / "INCOMPLETE");
}

LoadedRun load_run(const fs::path& dir) {
    if (fs::exists(dir / "INCOMPLETE"))
        throw Error("IncompatibleRuns", dir.string() + " is marked incomplete");
    LoadedRun run;
    run.config = parse_run_config(read_file(dir / "config.json"));
    const json meta = json::parse(read_file(dir / "meta.json"));
    run.case_hash = meta.at("case_hash").get<std::uint64_t>();
    run.xi_fingerprint = meta.at("xi_fingerprint").get<std::uint64_t>();
    run.base_mva = meta.value("base_mva", 100.0);

    PLFResult& r = run.result;
    r.method = meta.at("method").get<std::string>() == "collocation" ? RunMethod::collocation
                                                                     : RunMethod::monte_carlo;
    r.n_bus = meta.at("n_bus").get<int>();
    r.n_branch = meta.at("n_branch").get<int>();
    const int d_total = meta.at("d_total").get<int>();

    auto [columns, outputs] = read_outputs_bin(dir / "outputs.bin");
    r.columns = std::move(columns);
    r.outputs = std::move(outputs);

    if (r.method == RunMethod::collocation) {
        AnisoWeights gamma{meta.at("gamma").get<std::vector<double>>()};
        const int w = run.config.grid_kind == GridKind::tensor ? run.config.l_max
                                                               : run.config.grid_w();
        r.grid = assemble(run.config.grid_kind, run.config.rule_kind, w, d_total,
                          run.config.grid_kind == GridKind::isotropic ? AnisoWeights{} : gamma,
                          run.config.l_max);
        if (r.grid.node_count() != static_cast<int>(r.outputs.rows()))
            throw Error("IncompatibleRuns",
                        dir.string() + ": grid does not match stored outputs");
        r.xi.resize(r.grid.node_count(), d_total);
        for (int i = 0; i < r.grid.node_count(); ++i)
            for (int k = 0; k < d_total; ++k) r.xi(i, k) = r.grid.nodes[i][k];
    } else {
        // MC xi not needed for statistics; skip parsing the sample dump
        r.xi.resize(0, d_total);
    }

    std::istringstream conv(read_file(dir / "convergence.csv"));
    std::string line;
    std::getline(conv, line);  // header
    while (std::getline(conv, line)) {
        if (line.empty()) continue;
        NodeRecord rec;
        int point = 0, flag = 0;
        std::sscanf(line.c_str(), "%d,%d,%d,%lf", &point, &flag, &rec.iterations,
                    &rec.max_mismatch);
        rec.converged = flag != 0;
        r.records.push_back(rec);
        if (!rec.converged) ++r.n_diverged;
    }
    if (static_cast<int>(r.records.size()) != r.sample_count())
        throw Error("IncompatibleRuns", dir.string() + ": convergence log does not match outputs");

    const json timing = json::parse(read_file(dir / "timing.json"));
    r.timing.t_eigenpairs = timing.value("t_eigenpairs", 0.0);
    r.timing.t_grid = timing.value("t_grid", 0.0);
    r.timing.t_kl = timing.value("t_kl", 0.0);
    r.timing.t_pf = timing.value("t_pf", 0.0);
    r.timing.t_total = timing.value("t_total", 0.0);

    const json bases = json::parse(read_file(dir / "kl_bases.json"));
    for (const auto& jb : bases) run.bases.push_back(kl_basis_from_json(jb.dump()));
    return run;
}

}  // namespace plf
