#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plf/case.hpp"

namespace plf {

enum class SourceKind { normal_load, binomial_generation, empirical_series };
enum class TargetQuantity { p_demand, q_demand, p_gen };

struct RandomSource {
    std::string id;
    SourceKind kind = SourceKind::normal_load;
    int bus = 0;
    TargetQuantity quantity = TargetQuantity::p_demand;
    double sigma_fraction = 0;  // normal_load: sigma as fraction of base value
    int n_units = 0;            // binomial_generation
    double outage_rate = 0;     // binomial_generation
    std::string column;         // empirical_series: CSV column name
    bool couple_q = true;       // p_demand sources: scale q_demand proportionally
};

/// A set of random sources with a joint mean and covariance (p.u.).
struct SourceGroup {
    std::string name;
    std::vector<RandomSource> sources;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::uint64_t seed = 0;  // recorded for reproducibility; 0 for series groups
};

/// Sample-based group construction for distribution-defined sources.
/// Sources are independent unless a correlation matrix is supplied (normal
/// sources only); it is applied through its symmetric square root.
/// Errors: DegenerateGroup when every source has zero variance.
SourceGroup build_group_from_distributions(
    const PowerSystemCase& base, const std::string& name, std::vector<RandomSource> sources,
    int n_samples, std::uint64_t seed,
    const std::optional<Eigen::MatrixXd>& correlation = std::nullopt);

struct SeriesTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // rows = time steps, p.u.
};

/// CSV with a header row; values in MW, converted by base_mva.
SeriesTable read_series_csv(const std::string& text, double base_mva);

/// Mean and sample covariance across time rows.
/// Errors: ColumnMissing, LengthMismatch.
SourceGroup build_group_from_series(const SeriesTable& table, const std::string& name,
                                    std::vector<RandomSource> sources);

struct ClampEvent {
    std::string source_id;
    double requested = 0;
    double applied = 0;
};

/// Overwrite the targeted injections of a copy of `base` with the given
/// per-group physical values. Values are clamped to physical ranges (loads
/// >= 0, binomial plants in [0, n_units * unit_cap]); clamps are logged.
PowerSystemCase apply_realization(const PowerSystemCase& base,
                                  const std::vector<SourceGroup>& groups,
                                  const std::vector<Eigen::VectorXd>& values,
                                  std::vector<ClampEvent>* clamp_log = nullptr);

/// Binomial plant unit capacity under the mean-preserving scaling:
/// base p_set / (n_units * (1 - outage_rate)).
double binomial_unit_capacity(double base_p_set, int n_units, double outage_rate);

/// One group to be constructed: either distribution-defined or series-defined.
struct GroupSpec {
    std::string name;
    std::vector<RandomSource> sources;
    int n_samples = 10000;
    std::uint64_t seed = 0;  // 0: derived from the run seed and group ordinal
    std::optional<Eigen::MatrixXd> correlation;
    std::string dataset;  // empirical groups: CSV path relative to the config
};

/// Parse an uncertainty config document (JSON text). Supports explicit group
/// lists and the "ieee118-morales" preset. Errors: SchemaViolation.
std::vector<GroupSpec> parse_uncertainty_config(const std::string& text,
                                                const PowerSystemCase& base);

/// Build one group from its spec (samples distributions or loads the series
/// CSV next to `base_dir`).
SourceGroup build_group(const PowerSystemCase& base, const GroupSpec& spec,
                        std::uint64_t derived_seed, const std::filesystem::path& base_dir);

/// The 118-bus preset: binomial generation plants (4 units, outage rate 0.09)
/// and banded-sigma normal loads with an exponential spatial correlation over
/// bus index (length 60).
std::vector<GroupSpec> ieee118_morales_preset(const PowerSystemCase& base);

}  // namespace plf
