#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plf/driver.hpp"
#include "plf/stats.hpp"

namespace plf {

struct ClassMetrics {
    std::string quantity_class;
    double eps_mu_mean = 0, eps_mu_max = 0;       // percent
    double eps_sigma_mean = 0, eps_sigma_max = 0; // percent
    double kld_mean = 0, kld_max = 0;
    int n_absolute_guard = 0;  // elements reported as absolute error (|ref| < 1e-9)
};

struct RunSummary {
    std::string label;
    int n_points = 0;
    int n_diverged = 0;
    Timing timing;
    std::vector<ClassMetrics> classes;  // empty for the reference run
};

struct ComparisonReport {
    std::string reference_label;
    std::vector<RunSummary> runs;  // reference first, then compared runs
};

struct ReportOptions {
    int n_bins = 100;
    int interp_samples = 10000;  // interpolant sampling depth for PDFs
    std::uint64_t seed = 777;
    int workers = 0;
    bool with_kld = true;
};

/// Compatibility check (same case, same xi space) + per-class accuracy
/// metrics of each run against the reference. Errors: IncompatibleRuns.
ComparisonReport build_report(const LoadedRun& reference, const std::vector<LoadedRun>& runs,
                              const ReportOptions& opt = {});

std::string report_metrics_csv(const ComparisonReport& report);
std::string report_timing_csv(const ComparisonReport& report);

/// Reporting-unit samples of one output column of a run: MC runs use their
/// stored outputs, collocation runs sample the interpolant. Voltages stay in
/// p.u., angles convert to degrees, powers to MW/MVAr.
std::vector<double> column_samples(const LoadedRun& run, int column, double base_mva,
                                   const ReportOptions& opt);

/// Column index for a quantity class + bus id or branch index.
int find_column(const PLFResult& result, const std::string& quantity_class, int id);

}  // namespace plf
