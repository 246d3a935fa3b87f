#include "anchor/abduction/abduction.hpp"

#include <cmath>
#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/gateway/extract.hpp"
#include "anchor/support/parallel.hpp"

namespace anchor::abduction {

using gateway::PromptTag;

std::string_view to_string(StopReason reason) noexcept {
    return reason == StopReason::TargetReached ? "TargetReached" : "MaxRounds";
}

std::vector<std::string> generate_sentences(gateway::Gateway& gw, const Scenario& scenario, int batch, int sample) {
    if (batch < 1) throw PreconditionError("batch must be at least 1");
    const auto request = gw.render(PromptTag::SentenceGen,
                                   {{"n", std::to_string(batch)},
                                    {"scenario", scenario.description},
                                    {"outcome1", scenario.outcome1},
                                    {"outcome2", scenario.outcome2}},
                                   sample);
    auto sentences = gw.ask<gateway::StringList>(request, gateway::extract_sentences).value_or(gateway::StringList{});
    if (sentences.size() > static_cast<std::size_t>(batch)) sentences.resize(static_cast<std::size_t>(batch));
    return sentences;
}

std::vector<std::string> harvest_factors(gateway::Gateway& gw, const std::vector<std::string>& sentences,
                                         int sample) {
    if (sentences.empty()) throw PreconditionError("harvest_factors needs at least one sentence");
    std::string numbered;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) numbered += '\n';
        numbered += std::to_string(i + 1) + ". " + sentences[i];
    }
    const auto request = gw.render(PromptTag::FactorExtract, {{"sentences", numbered}}, sample);
    const auto raw =
        gw.ask<gateway::StringList>(request, gateway::extract_string_array).value_or(gateway::StringList{});

    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& candidate : raw) {
        auto canonical = text::canonicalize(candidate);
        if (canonical.empty()) continue;
        if (seen.insert(text::normalize(canonical)).second) out.push_back(std::move(canonical));
    }
    return out;
}

std::vector<Factor> merge_validated(std::vector<Factor> pool, const std::vector<std::string>& candidates) {
    std::set<std::string> seen;
    for (const auto& f : pool) seen.insert(text::normalize(f.text));
    for (const auto& candidate : candidates) {
        const auto canonical = text::canonicalize(candidate);
        if (canonical.empty()) continue;
        if (seen.insert(text::normalize(canonical)).second) pool.push_back(make_factor(canonical));
    }
    return pool;
}

FactorLabel majority_label(const LabelTally& t) noexcept {
    if (t.o1 > t.o2 && t.o1 > t.neutral) return FactorLabel::SupportsO1;
    if (t.o2 > t.o1 && t.o2 > t.neutral) return FactorLabel::SupportsO2;
    return FactorLabel::Neutral;
}

std::map<FactorId, LabelTally> vote_factor_labels(gateway::Gateway& gw, const Scenario& scenario,
                                                  std::vector<Factor>& factors, int m) {
    if (m < 1 || m % 2 == 0) throw PreconditionError("label_votes must be a positive odd number");
    const std::size_t votes = static_cast<std::size_t>(m);
    std::vector<std::optional<FactorLabel>> answers(factors.size() * votes);

    support::parallel_for(answers.size(), gw.options().max_in_flight, [&](std::size_t slot) {
        const Factor& factor = factors[slot / votes];
        const auto request = gw.render(PromptTag::LabelVote,
                                       {{"scenario", scenario.description},
                                        {"outcome1", scenario.outcome1},
                                        {"outcome2", scenario.outcome2},
                                        {"factor", factor.text}},
                                       static_cast<int>(slot % votes));
        const auto key = text::normalize(factor.text);
        answers[slot] = gw.ask<FactorLabel>(request, [&](std::string_view raw) {
            const auto map = gateway::extract_label_map(raw);
            for (const auto& [name, label] : map) {
                if (text::normalize(name) == key) return label;
            }
            if (map.size() == 1) return map.front().second;
            throw ParseError("label map does not mention the factor");
        });
    });

    std::map<FactorId, LabelTally> tallies;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        LabelTally tally;
        for (std::size_t v = 0; v < votes; ++v) {
            const auto& answer = answers[i * votes + v];
            if (!answer) {
                ++tally.failed;
            } else if (*answer == FactorLabel::SupportsO1) {
                ++tally.o1;
            } else if (*answer == FactorLabel::SupportsO2) {
                ++tally.o2;
            } else {
                ++tally.neutral;
            }
        }
        factors[i].label = majority_label(tally);
        tallies[factors[i].id] = tally;
    }
    return tallies;
}

double self_consistency_error_bound(int m, double q) {
    if (m < 1) throw DomainError("m must be at least 1");
    if (!(q > 0.5 && q <= 1.0)) throw DomainError("q must lie in (0.5, 1]");
    const double gap = q - 0.5;
    return std::exp(-2.0 * m * gap * gap);
}

AbductionState build_factor_pool(gateway::Gateway& gw, const Scenario& scenario, const PipelineConfig& config) {
    config.validate();
    const auto& cfg = config.abduction;
    AbductionState state;
    if (cfg.n_target == 0) return state;

    bool reached = false;
    while (state.round < cfg.max_rounds) {
        const int sample = state.round;
        ++state.round;
        const auto sentences = generate_sentences(gw, scenario, cfg.batch, sample);
        if (!sentences.empty()) {
            state.pool = merge_validated(std::move(state.pool), harvest_factors(gw, sentences, sample));
        }
        state.pool_sizes.push_back(state.pool.size());
        if (state.pool.size() >= static_cast<std::size_t>(cfg.n_target)) {
            reached = true;
            break;
        }
    }
    state.stopped_reason = reached ? StopReason::TargetReached : StopReason::MaxRounds;
    state.tallies = vote_factor_labels(gw, scenario, state.pool, cfg.label_votes);
    return state;
}

}  // namespace anchor::abduction
