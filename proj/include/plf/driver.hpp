#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plf/acpf.hpp"
#include "plf/case.hpp"
#include "plf/kl.hpp"
#include "plf/sparse_grid.hpp"
#include "plf/uncertainty.hpp"

namespace plf {

enum class GammaPolicy { recursive_doubling, zeta_scaled, eigenvalue_normalized, explicit_gamma };
enum class RunMethod { collocation, monte_carlo };
/// Mapping from the per-dimension cap l_max to the grid index w:
/// offset: w = l_max - 1 (matches the reported sparse node counts);
/// direct: w = l_max.
enum class LevelConvention { offset, direct };

GammaPolicy gamma_policy_from_name(const std::string& s);
const char* gamma_policy_name(GammaPolicy p);

struct PLFConfig {
    std::filesystem::path case_ref;
    std::filesystem::path uncertainty_ref;
    RunMethod method = RunMethod::collocation;
    RuleKind rule_kind = RuleKind::fejer2;
    GridKind grid_kind = GridKind::anisotropic;
    int l_max = 5;
    LevelConvention convention = LevelConvention::offset;
    double energy_fraction = 0.90;
    GammaPolicy gamma_policy = GammaPolicy::recursive_doubling;
    double zeta = 2.0;
    std::vector<double> explicit_gamma;
    PowerFlowOptions pf;
    int mc_samples = 10000;
    std::uint64_t seed = 1;
    double diverged_fraction_max = 0.01;
    int workers = 0;  // 0 = all cores
    std::string output_dir;

    int grid_w() const { return convention == LevelConvention::offset ? l_max - 1 : l_max; }
};

/// Parse/serialize the on-disk run config (JSON). Unknown keys are rejected.
PLFConfig parse_run_config(const std::string& text);
std::string run_config_to_json(const PLFConfig& config);

struct XiGroup {
    SourceGroup group;
    KLBasis basis;  // truncated
    int offset = 0; // first dimension of this group in the global xi vector
};

/// Concatenation of per-group truncated KL bases with the per-group gamma
/// vectors (each restarting at 1).
struct GlobalXiSpace {
    std::vector<XiGroup> groups;
    int d_total = 0;
    AnisoWeights gamma;
    double t_eigenpairs = 0;  // seconds spent building covariances + eigenpairs

    /// Physical realization vectors for one global xi point.
    std::vector<Eigen::VectorXd> realize(std::span<const double> xi) const;
    std::string fingerprint_json() const;
};

GlobalXiSpace build_xi_space_from_groups(std::vector<SourceGroup> groups, const PLFConfig& config);
GlobalXiSpace build_xi_space(const PowerSystemCase& base, const std::vector<GroupSpec>& specs,
                             const PLFConfig& config,
                             const std::filesystem::path& base_dir = ".");

struct Timing {
    double t_eigenpairs = 0, t_grid = 0, t_kl = 0, t_pf = 0, t_total = 0;
};

struct NodeRecord {
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0;
};

enum class QuantityClass { v_mag = 0, v_ang, p_inj, q_inj, p_flow, q_flow };
constexpr std::array<const char*, 6> kQuantityClassNames = {"v_mag", "v_ang", "p_inj",
                                                            "q_inj", "p_flow", "q_flow"};

struct PLFResult {
    RunMethod method = RunMethod::collocation;
    SparseGrid grid;                  // collocation runs
    Eigen::MatrixXd xi;               // nodes/samples x d_total
    Eigen::MatrixXd outputs;          // nodes/samples x q, class-major columns
    std::vector<std::string> columns;
    int n_bus = 0, n_branch = 0;
    std::vector<NodeRecord> records;
    std::vector<std::pair<int, ClampEvent>> clamps;  // node index + event
    Timing timing;
    int n_diverged = 0;

    int sample_count() const { return static_cast<int>(outputs.rows()); }
    std::pair<int, int> class_range(QuantityClass c) const;  // [begin, end) column range
};

/// Column names for a case, class-major: v_mag per bus, v_ang per bus, p_inj,
/// q_inj per bus, then from-side p/q flow per branch.
std::vector<std::string> output_columns(const PowerSystemCase& sys);

/// Steps 2-5 over the sparse grid: one deterministic power flow per
/// collocation node, fanned out over workers. Node tasks write disjoint
/// output rows, so results do not depend on the schedule.
/// Errors: TooManyDiverged.
PLFResult run_collocation(const PowerSystemCase& base, const GlobalXiSpace& space,
                          const PLFConfig& config);

/// Same pipeline with mc_samples i.i.d. xi ~ U[-1,1]^d (seeded) instead of
/// the grid.
PLFResult run_monte_carlo(const PowerSystemCase& base, const GlobalXiSpace& space,
                          const PLFConfig& config);

/// Persisted run directory: config snapshot, grid/sample dumps, outputs
/// table, convergence and clamp logs, timing, KL bases.
void save_run(const std::filesystem::path& dir, const PLFConfig& config,
              const std::string& config_bytes, const GlobalXiSpace& space, const PLFResult& result,
              const std::string& case_bytes, double base_mva);

struct LoadedRun {
    PLFConfig config;
    PLFResult result;
    std::vector<KLBasis> bases;
    std::uint64_t case_hash = 0;
    std::uint64_t xi_fingerprint = 0;
    double base_mva = 100.0;
};

LoadedRun load_run(const std::filesystem::path& dir);

/// Binary outputs table (magic "PLFB", version, dims, column names, row-major
/// doubles).
void write_outputs_bin(const std::filesystem::path& path, const std::vector<std::string>& columns,
                       const Eigen::MatrixXd& rows);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_outputs_bin(
    const std::filesystem::path& path);

}  // namespace plf
