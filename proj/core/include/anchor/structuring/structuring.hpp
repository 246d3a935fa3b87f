#pragma once

#include <string>
#include <vector>

#include "anchor/abduction/abduction.hpp"
#include "anchor/domain/config.hpp"
#include "anchor/domain/types.hpp"
#include "anchor/gateway/gateway.hpp"
#include "anchor/structuring/backends.hpp"

namespace anchor::structuring {

inline constexpr const char* kDefaultTheme = "default";

// One LLM Theme query per cluster (members given as factor texts). Failures
// fall back to "Cluster <k>" (1-based); repeated themes get " (2)", " (3)".
std::vector<std::string> theme_clusters(gateway::Gateway& gw, const Scenario& scenario,
                                        const std::vector<std::vector<std::string>>& clusters);

// Makes themes unique under normalized comparison by suffixing " (k)".
std::vector<std::string> uniquify_themes(std::vector<std::string> themes);

// Asks, per cluster of two or more members, which factors to keep. Names
// outside the cluster are ignored; an empty keep set or a failed query keeps
// the cluster intact. Dropped factors leave the factor table.
FactorSpace prune_redundancy(gateway::Gateway& gw, const Scenario& scenario, FactorSpace space);

// alpha * theme + (1 - alpha) * mean(members), in the original space.
Vector cluster_prototype(const Vector& theme_vec, const std::vector<Vector>& member_vecs, double alpha);

Vector mean_vector(const std::vector<Vector>& vectors);

struct StructuringBackends {
    ReductionBackend* reduction = nullptr;   // PcaReduction when null
    ClusteringBackend* clustering = nullptr; // DensityClustering when null
};

// Embed, reduce, cluster, theme, prune, then compute prototypes. With
// clustering disabled or too few factors, or when every point is noise, a
// single "default" cluster over all factors is emitted whose prototype is
// the member mean.
FactorSpace build_hierarchy(gateway::Gateway& gw, const abduction::AbductionState& pool, const Scenario& scenario,
                            const PipelineConfig& config, bool clustering_enabled = true,
                            StructuringBackends backends = {});

}  // namespace anchor::structuring
