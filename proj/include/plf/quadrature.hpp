#pragma once

#include <functional>
#include <string>
#include <vector>

namespace plf {

enum class RuleKind { clenshaw_curtis, fejer2 };

const char* rule_name(RuleKind kind);
RuleKind rule_from_name(const std::string& name);

/// One-dimensional interpolatory rule on [-1,1].
///
/// Nodes are computed from a single closed form shared across levels so that
/// nested rules contain their parents bitwise: nodes(k) is an exact subset of
/// nodes(k+1). The midpoint is exactly 0 and the node list is exactly
/// symmetric (node[i] == -node[m-1-i]). Downstream deduplication in the
/// sparse grid module keys on these bit patterns.
struct Rule1D {
    RuleKind kind;
    int level = 1;                 // 1-based level k
    int order = 0;                 // node count m
    std::vector<double> nodes;     // ascending in [-1,1]
    std::vector<double> weights;   // integration weights, sum = 2
    std::vector<double> bary;      // barycentric interpolation weights
};

/// Clenshaw-Curtis: m = 1 for k = 1, else m = 2^(k-1) + 1. Closed rule
/// containing the endpoints.
Rule1D cc_rule(int level);

/// Fejer-2: m = 2^k - 1. Open rule, endpoints excluded.
Rule1D f2_rule(int level);

/// Node count for a level without building the rule.
int rule_order(RuleKind kind, int level);

/// Memoized access; rules are immutable and shared.
const Rule1D& rule(RuleKind kind, int level);

double integrate(const Rule1D& r, const std::function<double(double)>& f);

}  // namespace plf
