#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anchor/domain/types.hpp"

namespace anchor::structuring {

struct ReductionParams {
    int n_components = 10;
    int n_neighbors = 15;
    std::string metric = "cosine";

    friend bool operator==(const ReductionParams&, const ReductionParams&) = default;
};

struct ClusterParams {
    int min_cluster_size = 2;
    std::string metric = "euclidean";

    friend bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

struct Clustering {
    std::vector<std::vector<std::size_t>> clusters;  // ascending indices; clusters ordered by first index
    std::vector<std::size_t> noise;
};

// Pool-size driven defaults. DomainError when n_factors < 2.
ReductionParams derive_reduction_params(int n_factors);
ClusterParams derive_cluster_params(int n_factors);

class ReductionBackend {
public:
    virtual ~ReductionBackend() = default;
    virtual std::string name() const = 0;
    virtual std::vector<Vector> reduce(const std::vector<Vector>& vectors, const ReductionParams& params) = 0;
};

class ClusteringBackend {
public:
    virtual ~ClusteringBackend() = default;
    virtual std::string name() const = 0;
    virtual Clustering cluster(const std::vector<Vector>& points, const ClusterParams& params) = 0;
};

// Rows are L2-normalized (cosine geometry), centered, and projected onto the
// leading principal axes. Axis signs are fixed so the largest-magnitude
// loading is positive. Columns beyond the data rank are zero.
class PcaReduction : public ReductionBackend {
public:
    std::string name() const override { return "pca"; }
    std::vector<Vector> reduce(const std::vector<Vector>& vectors, const ReductionParams& params) override;
};

// HDBSCAN* over Euclidean distance: mutual-reachability distances with
// min_samples = min_cluster_size, a minimum spanning tree, the condensed
// cluster tree (edges of equal weight removed together), and
// excess-of-mass selection. The root is never selected.
class DensityClustering : public ClusteringBackend {
public:
    std::string name() const override { return "hdbscan"; }
    Clustering cluster(const std::vector<Vector>& points, const ClusterParams& params) override;
};

}  // namespace anchor::structuring
