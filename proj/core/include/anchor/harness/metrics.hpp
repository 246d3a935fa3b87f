#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/harness/datasets.hpp"
#include "anchor/inference/inference.hpp"

namespace anchor::harness {

enum class PairPrediction { Context1, Context2, Same, Unknown };

std::string_view to_string(PairPrediction prediction) noexcept;

inline constexpr double kDefaultEpsSame = 1e-9;

// Unknown when either report abstained; otherwise compares P(O1|C1) with
// P(O1|C2).
PairPrediction classify_pairwise(const inference::PosteriorReport& first, const inference::PosteriorReport& second,
                                 double eps_same = kDefaultEpsSame);

struct ClassScore {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct MetricsReport {
    std::size_t instances = 0;
    std::map<std::string, ClassScore> per_class;
    double micro_f1 = 0.0;
    double coverage = 0.0;
    double unknown_rate = 0.0;
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// One-vs-rest scores. An Unknown prediction is a miss for the gold class and
// a false positive for none. `mapped` flags instances whose two conditions
// both received factors; when empty, non-Unknown predictions count as mapped.
MetricsReport evaluate_pairwise(const std::vector<PairPrediction>& predictions, const std::vector<PairGold>& golds,
                                const std::vector<bool>& mapped = {});

enum class DecisionMode { Argmax, Threshold };

// Argmax: correct iff P(gold) > P(other); reports without a posterior are
// wrong. Threshold: "support" (O1) iff p_final > tau_dec, abstentions are
// "unsupport". balanced_accuracy is the mean per-class recall.
MetricsReport evaluate_decision(const std::vector<inference::PosteriorReport>& reports,
                                const std::vector<DecisionGold>& golds, double tau_dec, DecisionMode mode);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& json);
std::string metrics_table(const MetricsReport& report);

}  // namespace anchor::harness
