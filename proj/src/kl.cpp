#include "plf/kl.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "plf/errors.hpp"

namespace plf {

using json = nlohmann::ordered_json;

KLBasis decompose(const SourceGroup& group) {
    const Eigen::MatrixXd& c = group.covariance;
    const int m = static_cast<int>(c.rows());
    if (m == 0 || c.cols() != m) throw Error("NotSymmetric", "covariance is not square");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error("NotSymmetric", "covariance of group '" + group.name + "' is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success)
        throw Error("NotSymmetric", "eigendecomposition failed for group '" + group.name + "'");

    // sort descending
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd& lam = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] > lam[b]; });

    KLBasis basis;
    basis.group_name = group.name;
    basis.mean = group.mean;
    basis.eigenvalues.resize(m);
    basis.eigenvectors.resize(m, m);
    const double lam_max = std::max(lam.maxCoeff(), 0.0);
    for (int k = 0; k < m; ++k) {
        double v = lam[order[k]];
        if (v < 0) {
            if (v < -1e-10 * std::max(lam_max, 1e-300))
                throw Error("IndefiniteBeyondTolerance",
                            "group '" + group.name + "': eigenvalue " + std::to_string(v));
            v = 0.0;
        }
        basis.eigenvalues[k] = v;
        Eigen::VectorXd col = es.eigenvectors().col(order[k]);
        int arg = 0;
        for (int i = 1; i < m; ++i)
            if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
        if (col[arg] < 0) col = -col;
        basis.eigenvectors.col(k) = col;
    }
    basis.d = m;
    return basis;
}

KLBasis truncate(KLBasis basis, double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw Error("XiOutOfRange", "energy_fraction must be in (0,1]");
    const double total = basis.eigenvalues.sum();
    const int m = basis.full_dim();
    if (total <= 0.0) {
        basis.d = 1;
        return basis;
    }
    double acc = 0.0;
    int d = m;
    for (int n = 0; n < m; ++n) {
        acc += basis.eigenvalues[n];
        if (acc / total >= energy_fraction) {
            d = n + 1;
            break;
        }
    }
    basis.d = d;
    return basis;
}

Eigen::VectorXd evaluate(const KLBasis& basis, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != basis.d)
        throw Error("XiOutOfRange", "xi length " + std::to_string(xi.size()) +
                                        " does not match truncation order " + std::to_string(basis.d));
    for (double v : xi)
        if (!(std::abs(v) <= 1.0 + 1e-12)) throw Error("XiOutOfRange", "|xi| must be <= 1");
    Eigen::VectorXd out = basis.mean;
    for (int n = 0; n < basis.d; ++n) {
        const double a = std::sqrt(basis.eigenvalues[n]) * basis.scale * xi[n];
        if (a != 0.0) out += a * basis.eigenvectors.col(n);
    }
    return out;
}

double variance_captured(const KLBasis& basis) {
    const double total = basis.eigenvalues.sum();
    if (total <= 0.0) return 1.0;
    return basis.eigenvalues.head(basis.d).sum() / total;
}

std::string kl_basis_to_json(const KLBasis& basis) {
    json doc;
    doc["group"] = basis.group_name;
    doc["d"] = basis.d;
    doc["scale"] = basis.scale;
    doc["mean"] = std::vector<double>(basis.mean.begin(), basis.mean.end());
    doc["eigenvalues"] = std::vector<double>(basis.eigenvalues.begin(), basis.eigenvalues.end());
    json vecs = json::array();
    for (int c = 0; c < basis.eigenvectors.cols(); ++c) {
        const auto col = basis.eigenvectors.col(c);
        vecs.push_back(std::vector<double>(col.begin(), col.end()));
    }
    doc["eigenvectors"] = std::move(vecs);
    return doc.dump(2) + "\n";
}

KLBasis kl_basis_from_json(const std::string& text) {
    json doc = json::parse(text);
    KLBasis basis;
    basis.group_name = doc.at("group").get<std::string>();
    basis.d = doc.at("d").get<int>();
    basis.scale = doc.at("scale").get<double>();
    const auto mean = doc.at("mean").get<std::vector<double>>();
    const auto lam = doc.at("eigenvalues").get<std::vector<double>>();
    const int m = static_cast<int>(mean.size());
    basis.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), m);
    basis.eigenvalues = Eigen::Map<const Eigen::VectorXd>(lam.data(), m);
    basis.eigenvectors.resize(m, m);
    const auto& vecs = doc.at("eigenvectors");
    for (int c = 0; c < m; ++c) {
        const auto col = vecs.at(c).get<std::vector<double>>();
        basis.eigenvectors.col(c) = Eigen::Map<const Eigen::VectorXd>(col.data(), m);
    }
    return basis;
}

}  // namespace plf
