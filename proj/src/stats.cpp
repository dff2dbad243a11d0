#include "plf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "plf/errors.hpp"
#include "plf/rng.hpp"
#include "plf/util.hpp"

namespace plf {

Moments moments_quadrature(const PLFResult& result) {
    if (result.method != RunMethod::collocation)
        throw Error("IncompatibleRuns", "quadrature moments need a collocation result");
    const int n = result.sample_count();
    const int q = static_cast<int>(result.outputs.cols());
    double wsum = 0.0;
    for (int i = 0; i < n; ++i)
        if (result.records[i].converged) wsum += result.grid.weights[static_cast<size_t>(i)];
    if (result.n_diverged == n || wsum <= 0.0)
        throw Error("AllNodesDiverged", "no converged collocation nodes");

    Moments m;
    m.renormalized = result.n_diverged > 0;
    m.mean = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd second = Eigen::VectorXd::Zero(q);
    for (int i = 0; i < n; ++i) {
        if (!result.records[i].converged) continue;
        const double w = result.grid.weights[static_cast<size_t>(i)];
        m.mean += w * result.outputs.row(i).transpose();
        second += w * result.outputs.row(i).cwiseProduct(result.outputs.row(i)).transpose();
    }
    m.mean /= wsum;
    second /= wsum;
    m.stddev = (second - m.mean.cwiseProduct(m.mean)).cwiseMax(0.0).cwiseSqrt();
    return m;
}

Moments moments_empirical(const PLFResult& result) {
    const int n = result.sample_count();
    const int q = static_cast<int>(result.outputs.cols());
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (result.records[i].converged) keep.push_back(i);
    if (keep.empty()) throw Error("AllNodesDiverged", "no converged samples");

    Moments m;
    m.mean = Eigen::VectorXd::Zero(q);
    for (int i : keep) m.mean += result.outputs.row(i).transpose();
    m.mean /= static_cast<double>(keep.size());
    if (keep.size() == 1) {
        m.stddev = Eigen::VectorXd::Zero(q);
        m.single_sample = true;
        return m;
    }
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(q);
    for (int i : keep) {
        const Eigen::VectorXd dev = result.outputs.row(i).transpose() - m.mean;
        ss += dev.cwiseProduct(dev);
    }
    m.stddev = (ss / (static_cast<double>(keep.size()) - 1.0)).cwiseSqrt();
    return m;
}

Histogram histogram(std::span<const double> samples, double lo, double hi, int n_bins) {
    if (n_bins < 1) throw Error("BinMismatch", "n_bins must be >= 1");
    if (samples.empty()) throw Error("BinMismatch", "no samples to histogram");
    // a span at rounding-noise scale is constant data: one occupied bin
    const double span_tol =
        64 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (hi - lo <= span_tol) {
        const double center = 0.5 * (lo + hi);
        const double pad = std::max(1e-12, std::abs(center) * 1e-9);
        Histogram h;
        h.edges.resize(n_bins + 1);
        const double width = 2.0 * pad / n_bins;
        for (int b = 0; b <= n_bins; ++b) h.edges[b] = center - pad + b * width;
        h.density.assign(n_bins, 0.0);
        h.density[static_cast<size_t>(n_bins / 2)] = 1.0 / width;
        return h;
    }
    Histogram h;
    h.edges.resize(n_bins + 1);
    const double width = (hi - lo) / n_bins;
    for (int b = 0; b <= n_bins; ++b) h.edges[b] = lo + b * width;
    h.density.assign(n_bins, 0.0);
    for (double v : samples) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, n_bins - 1);
        h.density[static_cast<size_t>(b)] += 1.0;
    }
    const double norm = static_cast<double>(samples.size()) * width;
    for (double& d : h.density) d /= norm;
    return h;
}

Cdf empirical_cdf(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    Cdf c;
    const size_t n = samples.size();
    c.values = std::move(samples);
    c.prob.resize(n);
    for (size_t i = 0; i < n; ++i) c.prob[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    return c;
}

Eigen::MatrixXd sample_interpolant(const SparseGrid& grid, const Eigen::MatrixXd& values,
                                   const std::vector<int>& columns, int n_samples,
                                   std::uint64_t seed, int workers) {
    if (values.rows() != grid.node_count())
        throw Error("ValuesMissing", "interpolant values not populated");
    Eigen::MatrixXd sel(values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (size_t c = 0; c < columns.size(); ++c) sel.col(static_cast<Eigen::Index>(c)) = values.col(columns[c]);

    constexpr int kBlock = 2048;
    const int n_blocks = (n_samples + kBlock - 1) / kBlock;
    Eigen::MatrixXd out(n_samples, sel.cols());
    const int d = grid.d;

    parallel_for(n_blocks, workers, [&](int b) {
        const int begin = b * kBlock;
        const int count = std::min(kBlock, n_samples - begin);
        Rng rng(mix_seed(seed, 3000 + static_cast<std::uint64_t>(b)));
        Eigen::MatrixXd phi(count, grid.node_count());
        std::vector<double> z(static_cast<size_t>(d));
        for (int i = 0; i < count; ++i) {
            for (int k = 0; k < d; ++k) z[static_cast<size_t>(k)] = rng.uniform_sym();
            phi.row(i) = interpolation_row(grid, z).transpose();
        }
        out.middleRows(begin, count) = phi * sel;
    });
    return out;
}

double kld(const Histogram& ref, const Histogram& grid) {
    if (ref.edges.size() != grid.edges.size() || ref.edges != grid.edges)
        throw Error("BinMismatch", "histograms have different bin edges");
    constexpr double kFloor = 1e-12;
    double sum = 0.0;
    for (size_t b = 0; b < ref.density.size(); ++b) {
        const double width = ref.edges[b + 1] - ref.edges[b];
        const double p = std::max(ref.density[b] * width, kFloor);
        const double q = std::max(grid.density[b] * width, kFloor);
        sum += p * std::log(p / q);
    }
    return sum;
}

ErrorMetric relative_error_pct(double ref, double test) {
    ErrorMetric m;
    if (std::abs(ref) < 1e-9) {
        m.absolute = true;
        m.value = std::abs(ref - test);
    } else {
        m.value = std::abs((ref - test) / ref) * 100.0;
    }
    return m;
}

}  // namespace plf
