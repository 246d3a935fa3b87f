#include <Eigen/Dense>

#include <cmath>

#include "anchor/domain/errors.hpp"
#include "anchor/structuring/backends.hpp"

namespace anchor::structuring {

ReductionParams derive_reduction_params(int n_factors) {
    if (n_factors < 2) throw DomainError("reduction needs at least 2 factors");
    ReductionParams p;
    p.n_components = std::min(50, std::max(10, n_factors / 5));
    p.n_neighbors = std::min(15, n_factors - 1);
    return p;
}

ClusterParams derive_cluster_params(int n_factors) {
    if (n_factors < 2) throw DomainError("clustering needs at least 2 factors");
    ClusterParams p;
    p.min_cluster_size = std::max(2, n_factors / 20);
    return p;
}

std::vector<Vector> PcaReduction::reduce(const std::vector<Vector>& vectors, const ReductionParams& params) {
    if (vectors.size() < 2) throw DomainError("reduction needs at least 2 vectors");
    if (params.n_components < 1) throw DomainError("n_components must be positive");
    const auto n = static_cast<Eigen::Index>(vectors.size());
    const auto d = static_cast<Eigen::Index>(vectors.front().size());

    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = vectors[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(v.size()) != d) throw BackendError("vectors differ in dimension");
        double norm = 0.0;
        for (double c : v) {
            if (!std::isfinite(c)) throw BackendError("non-finite embedding component");
            norm += c * c;
        }
        norm = std::sqrt(norm);
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = norm > 0.0 ? v[static_cast<std::size_t>(j)] / norm : 0.0;
    }
    x.rowwise() -= x.colwise().mean();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const Eigen::MatrixXd& axes = svd.matrixV();
    const auto& singular = svd.singularValues();
    const double cutoff = singular.size() > 0 ? singular(0) * 1e-12 : 0.0;

    const auto out_dim = static_cast<Eigen::Index>(params.n_components);
    std::vector<Vector> out(vectors.size(), Vector(static_cast<std::size_t>(out_dim), 0.0));
    const Eigen::Index usable = std::min<Eigen::Index>(out_dim, axes.cols());
    for (Eigen::Index c = 0; c < usable; ++c) {
        if (!(singular(c) > cutoff)) break;
        Eigen::VectorXd axis = axes.col(c);
        Eigen::Index pivot = 0;
        axis.cwiseAbs().maxCoeff(&pivot);
        if (axis(pivot) < 0.0) axis = -axis;
        const Eigen::VectorXd projected = x * axis;
        for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = projected(i);
    }
    return out;
}

}  // namespace anchor::structuring
