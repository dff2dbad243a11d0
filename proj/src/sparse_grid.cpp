#include "plf/sparse_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "plf/errors.hpp"

namespace plf {

double AnisoWeights::min() const {
    double m = gamma.at(0);
    for (double g : gamma) m = std::min(m, g);
    return m;
}

double AnisoWeights::sum() const {
    double s = 0.0;
    for (double g : gamma) s += g;
    return s;
}

const char* grid_kind_name(GridKind kind) {
    switch (kind) {
        case GridKind::tensor: return "tensor";
        case GridKind::isotropic: return "isotropic";
        default: return "anisotropic";
    }
}

GridKind grid_kind_from_name(const std::string& name) {
    if (name == "tensor") return GridKind::tensor;
    if (name == "isotropic") return GridKind::isotropic;
    if (name == "anisotropic") return GridKind::anisotropic;
    throw Error("InvalidGridKind", "unknown grid kind '" + name + "'");
}

namespace {

// Boundary test for the index-set inequality. Every finite double is a dyadic
// rational, so gamma scales to exact integers unless the needed scale
// overflows; the default gamma policies stay well inside the exact regime.
class LevelSelector {
public:
    LevelSelector(int w, const AnisoWeights& gamma) : gamma_(gamma.gamma) {
        double scale = 1.0;
        exact_ = true;
        for (int k = 0; k <= 45 && exact_; ++k) {
            bool ok = true;
            for (double g : gamma_) {
                const double s = g * scale;
                if (s != std::floor(s) || std::abs(s) > 9.0e13) { ok = false; break; }
            }
            if (ok) {
                for (double g : gamma_) int_gamma_.push_back(static_cast<long long>(g * scale));
                break;
            }
            scale *= 2.0;
            if (k == 45) exact_ = false;
        }
        if (int_gamma_.empty()) exact_ = false;

        gmin_ = gamma.min();
        gsum_ = gamma.sum();
        if (exact_) {
            imin_ = *std::min_element(int_gamma_.begin(), int_gamma_.end());
            isum_ = 0;
            for (long long g : int_gamma_) isum_ += g;
            ibound_ = static_cast<long long>(w) * imin_;
        }
        fbound_ = static_cast<double>(w) * gmin_;
        tol_ = 1e-12 * std::max(1.0, std::abs(fbound_));
    }

    // weighted level sum of (index - 1)
    bool in_x(const std::vector<int>& index) const {
        if (exact_) {
            long long s = 0;
            for (size_t n = 0; n < index.size(); ++n) s += (index[n] - 1) * int_gamma_[n];
            return s <= ibound_;
        }
        double s = 0.0;
        for (size_t n = 0; n < index.size(); ++n) s += (index[n] - 1) * gamma_[n];
        return s <= fbound_ + tol_;
    }

    // strict lower edge of the selection band: sum > w*gmin - |gamma|
    bool above_band_floor(const std::vector<int>& index) const {
        if (exact_) {
            long long s = 0;
            for (size_t n = 0; n < index.size(); ++n) s += (index[n] - 1) * int_gamma_[n];
            return s > ibound_ - isum_;
        }
        double s = 0.0;
        for (size_t n = 0; n < index.size(); ++n) s += (index[n] - 1) * gamma_[n];
        return s > fbound_ - gsum_ + tol_;
    }

    // largest admissible level in dimension n (before the cap)
    int max_level(int n, int w) const {
        if (exact_ && int_gamma_[n] > 0)
            return static_cast<int>(static_cast<long long>(w) * imin_ / int_gamma_[n]) + 1;
        return static_cast<int>(std::floor(fbound_ / gamma_[n] + 1e-12)) + 1;
    }

private:
    std::vector<double> gamma_;
    std::vector<long long> int_gamma_;
    bool exact_ = false;
    long long imin_ = 1, isum_ = 0, ibound_ = 0;
    double gmin_ = 1.0, gsum_ = 0.0, fbound_ = 0.0, tol_ = 0.0;
};

void check_dims(int w, const AnisoWeights& gamma) {
    const int d = gamma.dim();
    if (d < 1) throw Error("InvalidDimension", "dimension must be >= 1");
    if (d > 64) throw Error("DimensionTooLarge", "dimension " + std::to_string(d) + " exceeds 64");
    if (w < 0) throw Error("InvalidLevel", "grid index w must be >= 0");
    for (double g : gamma.gamma)
        if (!(g > 0)) throw Error("InvalidGamma", "gamma entries must be positive");
}

void enumerate_x(const LevelSelector& sel, int w, int level_cap, int d,
                 std::vector<int>& cur, int dim, std::vector<std::vector<int>>& out) {
    if (dim == d) {
        out.push_back(cur);
        return;
    }
    const int hi = std::min(level_cap, sel.max_level(dim, w));
    for (int lev = 1; lev <= hi; ++lev) {
        cur[dim] = lev;
        if (!sel.in_x(cur)) break;  // sum is monotone in lev
        enumerate_x(sel, w, level_cap, d, cur, dim + 1, out);
    }
    cur[dim] = 1;
}

}  // namespace

std::vector<std::vector<int>> build_index_set_x(int w, const AnisoWeights& gamma, int level_cap) {
    check_dims(w, gamma);
    LevelSelector sel(w, gamma);
    const int d = gamma.dim();
    std::vector<std::vector<int>> out;
    std::vector<int> cur(d, 1);
    enumerate_x(sel, w, level_cap, d, cur, 0, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> build_index_set(int w, const AnisoWeights& gamma, int level_cap) {
    LevelSelector sel(w, gamma);
    auto x = build_index_set_x(w, gamma, level_cap);
    std::vector<std::vector<int>> out;
    for (auto& idx : x)
        if (sel.above_band_floor(idx)) out.push_back(std::move(idx));
    return out;
}

int coefficient(const std::vector<int>& index, int w, const AnisoWeights& gamma, int level_cap) {
    check_dims(w, gamma);
    const int d = gamma.dim();
    if (static_cast<int>(index.size()) != d)
        throw Error("InvalidDimension", "index length does not match gamma length");
    LevelSelector sel(w, gamma);
    int c = 0;
    std::vector<int> shifted(index);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        bool capped = false;
        int popcount = 0;
        for (int n = 0; n < d; ++n) {
            const int j = static_cast<int>((mask >> n) & 1u);
            shifted[n] = index[n] + j;
            popcount += j;
            if (shifted[n] > level_cap) { capped = true; break; }
        }
        if (capped || !sel.in_x(shifted)) continue;
        c += (popcount % 2 == 0) ? 1 : -1;
    }
    return c;
}

int coefficient_isotropic_closed_form(const std::vector<int>& index, int w) {
    const int d = static_cast<int>(index.size());
    const int N = w + d;
    int abs_i = 0;
    for (int v : index) abs_i += v;
    if (abs_i < N - d + 1 || abs_i > N) return 0;
    const int k = N - abs_i;  // 0..d-1
    long long binom = 1;
    for (int j = 1; j <= k; ++j) binom = binom * (d - 1 - (j - 1)) / j;
    return static_cast<int>((k % 2 == 0 ? 1 : -1) * binom);
}

SparseGrid assemble(GridKind kind, RuleKind rule_kind, int w, int d, AnisoWeights gamma,
                    int level_cap) {
    if (d < 1) throw Error("InvalidDimension", "dimension must be >= 1");
    if (d > 64) throw Error("DimensionTooLarge", "dimension " + std::to_string(d) + " exceeds 64");

    SparseGrid grid;
    grid.kind = kind;
    grid.rule_kind = rule_kind;
    grid.d = d;
    grid.level_cap = level_cap;

    if (kind == GridKind::tensor) {
        if (w < 1) throw Error("InvalidLevel", "tensor level must be >= 1");
        grid.w = w;
        grid.gamma = AnisoWeights::isotropic(d);
        grid.terms.push_back(GridTerm{std::vector<int>(d, w), 1, {}});
    } else {
        if (gamma.gamma.empty()) gamma = AnisoWeights::isotropic(d);
        if (gamma.dim() != d) throw Error("InvalidGamma", "gamma length does not match dimension");
        if (kind == GridKind::isotropic) {
            for (double g : gamma.gamma)
                if (g != gamma.gamma.front())
                    throw Error("InvalidGamma", "isotropic grid requires all-equal gamma");
        }
        grid.w = w;
        grid.gamma = gamma;
        for (auto& index : build_index_set_x(w, gamma, level_cap)) {
            const int c = coefficient(index, w, gamma, level_cap);
            if (c != 0) grid.terms.push_back(GridTerm{index, c, {}});
        }
        std::sort(grid.terms.begin(), grid.terms.end(),
                  [](const GridTerm& a, const GridTerm& b) { return a.index < b.index; });
    }

    // pass 1: collect unique nodes (lexicographic order via std::map)
    std::map<std::vector<double>, int>& node_ix = grid.node_index;
    std::vector<double> point(d);
    for (const auto& term : grid.terms) {
        std::vector<const Rule1D*> rules(d);
        for (int n = 0; n < d; ++n) rules[n] = &rule(rule_kind, term.index[n]);
        std::vector<int> odo(d, 0);
        while (true) {
            for (int n = 0; n < d; ++n) point[n] = rules[n]->nodes[odo[n]];
            node_ix.emplace(point, 0);
            int n = d - 1;
            while (n >= 0 && ++odo[n] == rules[n]->order) odo[n--] = 0;
            if (n < 0) break;
        }
    }
    grid.nodes.reserve(node_ix.size());
    for (auto& [node, id] : node_ix) {
        id = static_cast<int>(grid.nodes.size());
        grid.nodes.push_back(node);
    }
    grid.weights.assign(grid.nodes.size(), 0.0);

    // pass 2: per-term node ids and combined weights
    for (auto& term : grid.terms) {
        std::vector<const Rule1D*> rules(d);
        long long tensor_size = 1;
        for (int n = 0; n < d; ++n) {
            rules[n] = &rule(rule_kind, term.index[n]);
            tensor_size *= rules[n]->order;
        }
        term.node_ids.reserve(static_cast<size_t>(tensor_size));
        std::vector<int> odo(d, 0);
        while (true) {
            double wprod = term.coeff;
            for (int n = 0; n < d; ++n) {
                point[n] = rules[n]->nodes[odo[n]];
                wprod *= rules[n]->weights[odo[n]];
            }
            const int id = node_ix.at(point);
            term.node_ids.push_back(id);
            grid.weights[id] += wprod;
            int n = d - 1;
            while (n >= 0 && ++odo[n] == rules[n]->order) odo[n--] = 0;
            if (n < 0) break;
        }
    }
    return grid;
}

double estimate_node_count(int k, int d) {
    if (k < 1 || d < 1) throw Error("InvalidLevel", "estimate requires k >= 1 and d >= 1");
    double v = 1.0;
    for (int j = 1; j <= k; ++j) v *= 2.0 * d / j;
    return v;
}

Eigen::VectorXd interpolation_row(const SparseGrid& grid, std::span<const double> z) {
    const int d = grid.d;
    if (static_cast<int>(z.size()) != d)
        throw Error("InvalidDimension", "query point dimension mismatch");
    for (double v : z)
        if (!(std::abs(v) <= 1.0 + 1e-12))
            throw Error("XiOutOfRange", "interpolation point outside [-1,1]^d");

    Eigen::VectorXd row = Eigen::VectorXd::Zero(grid.node_count());
    std::vector<std::vector<double>> ell(d);
    for (const auto& term : grid.terms) {
        long long tensor_size = 1;
        for (int n = 0; n < d; ++n) {
            const Rule1D& r = rule(grid.rule_kind, term.index[n]);
            const int m = r.order;
            auto& l = ell[n];
            l.assign(m, 0.0);
            int hit = -1;
            for (int j = 0; j < m; ++j)
                if (z[n] == r.nodes[j]) { hit = j; break; }
            if (hit >= 0) {
                l[hit] = 1.0;
            } else {
                double denom = 0.0;
                for (int j = 0; j < m; ++j) {
                    l[j] = r.bary[j] / (z[n] - r.nodes[j]);
                    denom += l[j];
                }
                for (int j = 0; j < m; ++j) l[j] /= denom;
            }
            tensor_size *= m;
        }
        std::vector<int> odo(d, 0);
        for (long long t = 0; t < tensor_size; ++t) {
            double prod = term.coeff;
            for (int n = 0; n < d; ++n) prod *= ell[n][odo[n]];
            row[term.node_ids[static_cast<size_t>(t)]] += prod;
            int n = d - 1;
            while (n >= 0 && ++odo[n] == static_cast<int>(ell[n].size())) odo[n--] = 0;
        }
    }
    return row;
}

Eigen::VectorXd interpolate(const Interpolant& interp, std::span<const double> z) {
    if (interp.grid == nullptr || interp.values.rows() != interp.grid->node_count())
        throw Error("ValuesMissing", "interpolant values not populated");
    return interp.values.transpose() * interpolation_row(*interp.grid, z);
}

Eigen::VectorXd integrate_grid(const Interpolant& interp) {
    if (interp.grid == nullptr || interp.values.rows() != interp.grid->node_count())
        throw Error("ValuesMissing", "interpolant values not populated");
    Eigen::Map<const Eigen::VectorXd> w(interp.grid->weights.data(),
                                        static_cast<Eigen::Index>(interp.grid->weights.size()));
    return interp.values.transpose() * w;
}

}  // namespace plf
