#include "plf/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plf/errors.hpp"
#include "plf/util.hpp"

namespace plf {

namespace {

Moments run_moments(const PLFResult& r) {
    return r.method == RunMethod::collocation ? moments_quadrature(r) : moments_empirical(r);
}

// Raw per-column samples (p.u./radians) for PDF estimation.
Eigen::MatrixXd run_samples(const LoadedRun& run, const std::vector<int>& columns,
                            const ReportOptions& opt) {
    const PLFResult& r = run.result;
    if (r.method == RunMethod::monte_carlo) {
        std::vector<int> keep;
        for (int i = 0; i < r.sample_count(); ++i)
            if (r.records[i].converged) keep.push_back(i);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()),
                            static_cast<Eigen::Index>(columns.size()));
        for (size_t i = 0; i < keep.size(); ++i)
            for (size_t c = 0; c < columns.size(); ++c)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    r.outputs(keep[i], columns[c]);
        return out;
    }
    if (r.n_diverged > 0)
        throw Error("AllNodesDiverged",
                    "interpolant sampling is unavailable with diverged collocation nodes");
    return sample_interpolant(r.grid, r.outputs, columns, opt.interp_samples, opt.seed,
                              opt.workers);
}

}  // namespace

ComparisonReport build_report(const LoadedRun& reference, const std::vector<LoadedRun>& runs,
                              const ReportOptions& opt) {
    ComparisonReport report;
    const PLFResult& ref = reference.result;

    for (const LoadedRun& run : runs) {
        if (run.case_hash != reference.case_hash)
            throw Error("IncompatibleRuns", "runs use different cases");
        if (run.xi_fingerprint != reference.xi_fingerprint)
            throw Error("IncompatibleRuns", "runs use different xi spaces");
        if (run.result.columns != ref.columns)
            throw Error("IncompatibleRuns", "runs have different output columns");
    }

    const Moments ref_m = run_moments(ref);

    RunSummary ref_summary;
    ref_summary.label = ref.method == RunMethod::collocation ? "reference-grid" : "reference-mc";
    ref_summary.n_points = ref.sample_count();
    ref_summary.n_diverged = ref.n_diverged;
    ref_summary.timing = ref.timing;
    report.reference_label = ref_summary.label;
    report.runs.push_back(ref_summary);

    for (size_t ri = 0; ri < runs.size(); ++ri) {
        const PLFResult& r = runs[ri].result;
        RunSummary summary;
        summary.label = (r.method == RunMethod::collocation ? std::string(grid_kind_name(r.grid.kind))
                                                            : std::string("monte_carlo")) +
                        "#" + std::to_string(ri);
        summary.n_points = r.sample_count();
        summary.n_diverged = r.n_diverged;
        summary.timing = r.timing;

        const Moments m = run_moments(r);
        for (int ci = 0; ci < 6; ++ci) {
            const auto cls = static_cast<QuantityClass>(ci);
            const auto [begin, end] = r.class_range(cls);
            ClassMetrics cm;
            cm.quantity_class = kQuantityClassNames[static_cast<size_t>(ci)];

            std::vector<int> cols;
            for (int c = begin; c < end; ++c) cols.push_back(c);

            double mu_sum = 0, sig_sum = 0;
            for (int c : cols) {
                const ErrorMetric em = relative_error_pct(ref_m.mean[c], m.mean[c]);
                const ErrorMetric es = relative_error_pct(ref_m.stddev[c], m.stddev[c]);
                if (em.absolute || es.absolute) ++cm.n_absolute_guard;
                mu_sum += em.value;
                sig_sum += es.value;
                cm.eps_mu_max = std::max(cm.eps_mu_max, em.value);
                cm.eps_sigma_max = std::max(cm.eps_sigma_max, es.value);
            }
            cm.eps_mu_mean = mu_sum / static_cast<double>(cols.size());
            cm.eps_sigma_mean = sig_sum / static_cast<double>(cols.size());

            if (opt.with_kld) {
                const Eigen::MatrixXd ref_s = run_samples(reference, cols, opt);
                const Eigen::MatrixXd run_s = run_samples(runs[ri], cols, opt);
                double kld_sum = 0;
                for (size_t k = 0; k < cols.size(); ++k) {
                    const auto rc = ref_s.col(static_cast<Eigen::Index>(k));
                    const auto gc = run_s.col(static_cast<Eigen::Index>(k));
                    const double lo = std::min(rc.minCoeff(), gc.minCoeff());
                    const double hi = std::max(rc.maxCoeff(), gc.maxCoeff());
                    // a spread at solver-tolerance scale carries no
                    // distributional signal; count it as indistinguishable
                    if (hi - lo <= 1e-9) {
                        ++cm.n_absolute_guard;
                        continue;
                    }
                    const Histogram href =
                        histogram(std::span<const double>(rc.data(), rc.size()), lo, hi, opt.n_bins);
                    const Histogram hrun =
                        histogram(std::span<const double>(gc.data(), gc.size()), lo, hi, opt.n_bins);
                    const double v = kld(href, hrun);
                    kld_sum += v;
                    cm.kld_max = std::max(cm.kld_max, v);
                }
                cm.kld_mean = kld_sum / static_cast<double>(cols.size());
            }
            summary.classes.push_back(std::move(cm));
        }
        report.runs.push_back(std::move(summary));
    }
    return report;
}

std::string report_metrics_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "run,class,eps_mu_mean_pct,eps_mu_max_pct,eps_sigma_mean_pct,eps_sigma_max_pct,"
           "kld_mean,kld_max,n_absolute_guard\n";
    for (const RunSummary& run : report.runs) {
        for (const ClassMetrics& cm : run.classes)
            out << run.label << "," << cm.quantity_class << "," << fmt_double(cm.eps_mu_mean) << ","
                << fmt_double(cm.eps_mu_max) << "," << fmt_double(cm.eps_sigma_mean) << ","
                << fmt_double(cm.eps_sigma_max) << "," << fmt_double(cm.kld_mean) << ","
                << fmt_double(cm.kld_max) << "," << cm.n_absolute_guard << "\n";
    }
    return out.str();
}

std::string report_timing_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "run,n_samples,t_eigenpairs,t_grid,t_kl,t_pf,t_total\n";
    for (const RunSummary& run : report.runs)
        out << run.label << "," << run.n_points << "," << fmt_double(run.timing.t_eigenpairs) << ","
            << fmt_double(run.timing.t_grid) << "," << fmt_double(run.timing.t_kl) << ","
            << fmt_double(run.timing.t_pf) << "," << fmt_double(run.timing.t_total) << "\n";
    return out.str();
}

int find_column(const PLFResult& result, const std::string& quantity_class, int id) {
    for (int ci = 0; ci < 6; ++ci) {
        if (kQuantityClassNames[static_cast<size_t>(ci)] != quantity_class) continue;
        const auto [begin, end] = result.class_range(static_cast<QuantityClass>(ci));
        if (ci < 4) {
            const std::string want = quantity_class + ":" + std::to_string(id);
            for (int c = begin; c < end; ++c)
                if (result.columns[static_cast<size_t>(c)] == want) return c;
            throw Error("IncompatibleRuns", "bus " + std::to_string(id) + " not found for class " +
                                                quantity_class);
        }
        const int c = begin + id;
        if (c >= end) throw Error("IncompatibleRuns", "branch index out of range");
        return c;
    }
    throw Error("IncompatibleRuns", "unknown quantity class '" + quantity_class + "'");
}

std::vector<double> column_samples(const LoadedRun& run, int column, double base_mva,
                                   const ReportOptions& opt) {
    const Eigen::MatrixXd s = run_samples(run, {column}, opt);
    std::vector<double> out(s.data(), s.data() + s.rows());
    const std::string& name = run.result.columns[static_cast<size_t>(column)];
    double factor = 1.0;
    if (name.rfind("v_ang", 0) == 0) factor = 0.0;  // handled below
    if (name.rfind("p_", 0) == 0 || name.rfind("q_", 0) == 0) factor = base_mva;
    for (double& v : out) {
        if (name.rfind("v_ang", 0) == 0) v = rad_to_deg(v);
        else v *= factor == 0.0 ? 1.0 : factor;
    }
    return out;
}

}  // namespace plf
