#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/domain/config.hpp"
#include "anchor/domain/types.hpp"
#include "anchor/gateway/gateway.hpp"

namespace anchor::abduction {

enum class StopReason { TargetReached, MaxRounds };

std::string_view to_string(StopReason reason) noexcept;

// Votes cast for one factor. `failed` counts queries that produced no usable
// answer after retries; they carry no vote.
struct LabelTally {
    int o1 = 0;
    int o2 = 0;
    int neutral = 0;
    int failed = 0;

    friend bool operator==(const LabelTally&, const LabelTally&) = default;
};

struct AbductionState {
    int round = 0;
    std::vector<Factor> pool;              // generation order
    StopReason stopped_reason = StopReason::TargetReached;
    std::vector<std::size_t> pool_sizes;   // |pool| after each round
    std::map<FactorId, LabelTally> tallies;

    friend bool operator==(const AbductionState&, const AbductionState&) = default;
};

// One SentenceGen query; keeps at most `batch` sentences. `sample`
// distinguishes rounds. Returns [] when the response cannot be parsed.
std::vector<std::string> generate_sentences(gateway::Gateway& gw, const Scenario& scenario, int batch,
                                            int sample = 0);

// One FactorExtract query over the numbered sentences; canonicalized and
// deduplicated by normalized text. Returns [] on parse failure.
std::vector<std::string> harvest_factors(gateway::Gateway& gw, const std::vector<std::string>& sentences,
                                         int sample = 0);

// Appends candidates whose normalized text is not yet present. New factors
// carry no label.
std::vector<Factor> merge_validated(std::vector<Factor> pool, const std::vector<std::string>& candidates);

// Unique plurality of O1 or O2 wins; anything else is Neutral.
FactorLabel majority_label(const LabelTally& tally) noexcept;

// Queries LabelVote m times per factor and assigns the majority label in place.
std::map<FactorId, LabelTally> vote_factor_labels(gateway::Gateway& gw, const Scenario& scenario,
                                                  std::vector<Factor>& factors, int m);

// exp(-2 m (q - 0.5)^2); DomainError unless q in (0.5, 1] and m >= 1.
double self_consistency_error_bound(int m, double q);

// Generate, harvest, merge until the pool reaches n_target or max_rounds
// rounds have run, then label every factor.
AbductionState build_factor_pool(gateway::Gateway& gw, const Scenario& scenario, const PipelineConfig& config);

}  // namespace anchor::abduction
