#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anchor/domain/config.hpp"
#include "anchor/domain/types.hpp"
#include "anchor/gateway/gateway.hpp"

namespace anchor::mapping {

struct MappingResult {
    std::string condition_id;
    std::vector<FactorId> candidates;  // retrieval order
    std::map<FactorId, int> votes;     // every candidate, 0..R
    std::vector<FactorId> voted;       // candidate order
    std::vector<FactorId> final_set;   // candidate order
    bool abstained = true;
    std::uint64_t seed = 0;            // presentation-order shuffle seed

    friend bool operator==(const MappingResult&, const MappingResult&) = default;
};

// Embeddings of every factor in a space, computed once per space.
class FactorIndex {
public:
    FactorIndex(gateway::Gateway& gw, const FactorSpace& space);

    const Vector& vector(const FactorId& id) const { return vectors_.at(id); }
    // Stored prototype, or the member mean when the space carries none.
    const Vector& prototype(std::size_t cluster) const { return prototypes_.at(cluster); }

private:
    std::map<FactorId, Vector> vectors_;
    std::vector<Vector> prototypes_;
};

double cosine_similarity(const Vector& a, const Vector& b);

// Top-k1 clusters by prototype similarity, top-k2 members of each, plus the
// top-k2 unclustered factors; deduplicated. Ties go to the smaller id.
// PreconditionError on an empty space.
std::vector<FactorId> retrieve_candidates(gateway::Gateway& gw, const FactorSpace& space, const FactorIndex& index,
                                          const Condition& condition, int k1, int k2);

// γ = ⌈vote_ratio · R⌉.
int vote_threshold(int rounds, double vote_ratio);

// Fisher-Yates over a 64-bit Mersenne Twister with a modulo draw, so the
// order is identical on every platform.
std::vector<FactorId> shuffled(std::vector<FactorId> ids, std::uint64_t seed);

// Shuffle seed derived from the condition id.
std::uint64_t presentation_seed(const Condition& condition);

struct VoteOutcome {
    std::map<FactorId, int> votes;
    std::vector<FactorId> voted;
};

VoteOutcome vote_filter(gateway::Gateway& gw, const Scenario& scenario, const FactorSpace& space,
                        const Condition& condition, const std::vector<FactorId>& candidates, int rounds,
                        double vote_ratio, std::uint64_t seed);

// voted ∩ keep-list from one Reflect query; no query when voted is empty;
// voted unchanged when the query fails.
std::vector<FactorId> reflective_refine(gateway::Gateway& gw, const FactorSpace& space, const Condition& condition,
                                        const std::vector<FactorId>& voted);

// Retrieve, vote, refine. An empty space abstains without model calls.
MappingResult map_condition(gateway::Gateway& gw, const FactorSpace& space, const FactorIndex& index,
                            const Scenario& scenario, const Condition& condition, const MappingConfig& config);

std::string mapping_result_to_json(const MappingResult& result);
MappingResult mapping_result_from_json(const std::string& json);

}  // namespace anchor::mapping
