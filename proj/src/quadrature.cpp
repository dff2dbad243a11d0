#include "plf/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "plf/errors.hpp"

namespace plf {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_level(int level) {
    if (level < 1) throw Error("InvalidLevel", "rule level must be >= 1, got " + std::to_string(level));
    if (level > 30) throw Error("InvalidLevel", "rule level too large: " + std::to_string(level));
}

// Mirror the upper half onto the lower half so the node list is exactly
// symmetric and the midpoint is exactly 0.
void symmetrize(std::vector<double>& v) {
    const int m = static_cast<int>(v.size());
    if (m % 2 == 1) v[m / 2] = 0.0;
    for (int i = 0; i < m / 2; ++i) v[m - 1 - i] = -v[i];
}

}  // namespace

const char* rule_name(RuleKind kind) {
    return kind == RuleKind::clenshaw_curtis ? "clenshaw_curtis" : "fejer2";
}

RuleKind rule_from_name(const std::string& name) {
    if (name == "clenshaw_curtis" || name == "cc") return RuleKind::clenshaw_curtis;
    if (name == "fejer2" || name == "f2") return RuleKind::fejer2;
    throw Error("InvalidRule", "unknown quadrature rule '" + name + "'");
}

int rule_order(RuleKind kind, int level) {
    check_level(level);
    if (kind == RuleKind::clenshaw_curtis) return level == 1 ? 1 : (1 << (level - 1)) + 1;
    return (1 << level) - 1;
}

Rule1D cc_rule(int level) {
    check_level(level);
    Rule1D r;
    r.kind = RuleKind::clenshaw_curtis;
    r.level = level;
    r.order = rule_order(r.kind, level);
    const int m = r.order;
    r.nodes.resize(m);
    r.weights.resize(m);
    r.bary.resize(m);
    if (m == 1) {
        r.nodes[0] = 0.0;
        r.weights[0] = 2.0;
        r.bary[0] = 1.0;
        return r;
    }
    const int n = m - 1;  // power of two, so i/n is an exact division
    for (int i = 0; i <= n / 2; ++i)
        r.nodes[i] = -std::cos(kPi * (static_cast<double>(i) / n));
    symmetrize(r.nodes);

    // cosine-sum weights, exact for polynomials of degree <= m-1
    for (int j = 0; j <= n / 2; ++j) {
        double s = 0.0;
        for (int k = 1; k <= n / 2; ++k) {
            const double bk = (2 * k == n) ? 1.0 : 2.0;
            s += bk / (4.0 * k * k - 1.0) * std::cos(2.0 * k * j * kPi / n);
        }
        const double cj = (j == 0) ? 1.0 : 2.0;
        r.weights[j] = cj / n * (1.0 - s);
    }
    for (int j = 0; j < m / 2; ++j) r.weights[m - 1 - j] = r.weights[j];

    for (int j = 0; j < m; ++j) {
        double w = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == n) w *= 0.5;
        r.bary[j] = w;
    }
    return r;
}

Rule1D f2_rule(int level) {
    check_level(level);
    Rule1D r;
    r.kind = RuleKind::fejer2;
    r.level = level;
    r.order = rule_order(r.kind, level);
    const int m = r.order;
    const int n = m + 1;  // power of two
    r.nodes.resize(m);
    r.weights.resize(m);
    r.bary.resize(m);
    for (int j = 1; j <= n / 2; ++j)
        r.nodes[j - 1] = -std::cos(kPi * (static_cast<double>(j) / n));
    symmetrize(r.nodes);

    for (int j = 1; j <= n / 2; ++j) {
        const double theta = j * kPi / n;
        double s = 0.0;
        for (int l = 1; l <= n / 2; ++l)
            s += std::sin((2.0 * l - 1.0) * theta) / (2.0 * l - 1.0);
        r.weights[j - 1] = 4.0 / n * std::sin(theta) * s;
    }
    for (int j = 0; j < m / 2; ++j) r.weights[m - 1 - j] = r.weights[j];

    for (int j = 0; j < m; ++j) {
        const double s = std::sin((j + 1) * kPi / n);
        r.bary[j] = (j % 2 == 0 ? 1.0 : -1.0) * s * s;
    }
    return r;
}

const Rule1D& rule(RuleKind kind, int level) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::unique_ptr<Rule1D>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(static_cast<int>(kind), level);
    auto it = cache.find(key);
    if (it == cache.end()) {
        auto r = std::make_unique<Rule1D>(kind == RuleKind::clenshaw_curtis ? cc_rule(level)
                                                                            : f2_rule(level));
        it = cache.emplace(key, std::move(r)).first;
    }
    return *it->second;
}

double integrate(const Rule1D& r, const std::function<double(double)>& f) {
    double s = 0.0;
    for (int j = 0; j < r.order; ++j) s += r.weights[j] * f(r.nodes[j]);
    return s;
}

}  // namespace plf
