#include "anchor/mapping/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/gateway/extract.hpp"
#include "anchor/structuring/structuring.hpp"
#include "anchor/support/parallel.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::mapping {

using gateway::PromptTag;

namespace {

struct Scored {
    double score;
    FactorId id;
};

// Highest score first; equal scores by ascending id.
std::vector<FactorId> top_k(std::vector<Scored> scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    std::vector<FactorId> out;
    for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(std::max(k, 0)); ++i) {
        out.push_back(scored[i].id);
    }
    return out;
}

std::map<std::string, FactorId> names_of(const FactorSpace& space, const std::vector<FactorId>& ids) {
    std::map<std::string, FactorId> out;
    for (const auto& id : ids) out.emplace(text::normalize(space.factor(id).text), id);
    return out;
}

std::vector<std::string> texts_of(const FactorSpace& space, const std::vector<FactorId>& ids) {
    std::vector<std::string> out;
    for (const auto& id : ids) out.push_back(space.factor(id).text);
    return out;
}

}  // namespace

FactorIndex::FactorIndex(gateway::Gateway& gw, const FactorSpace& space) {
    std::vector<FactorId> ids;
    std::vector<std::string> texts;
    for (const auto& [id, f] : space.factors) {
        ids.push_back(id);
        texts.push_back(f.text);
    }
    auto vecs = gw.embed(texts);
    for (std::size_t i = 0; i < ids.size(); ++i) vectors_.emplace(ids[i], std::move(vecs[i]));
    for (const auto& cluster : space.clusters) {
        if (cluster.prototype) {
            prototypes_.push_back(*cluster.prototype);
        } else {
            std::vector<Vector> members;
            for (const auto& id : cluster.members) members.push_back(vectors_.at(id));
            prototypes_.push_back(structuring::mean_vector(members));
        }
    }
}

double cosine_similarity(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<FactorId> retrieve_candidates(gateway::Gateway& gw, const FactorSpace& space, const FactorIndex& index,
                                          const Condition& condition, int k1, int k2) {
    if (space.empty()) throw PreconditionError("cannot retrieve from an empty factor space");
    const std::vector<std::string> query = {condition.text};
    const Vector e_u = gw.embed(query).front();

    std::vector<std::pair<double, std::size_t>> cluster_scores;
    for (std::size_t c = 0; c < space.clusters.size(); ++c) {
        cluster_scores.emplace_back(cosine_similarity(e_u, index.prototype(c)), c);
    }
    std::sort(cluster_scores.begin(), cluster_scores.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    std::vector<FactorId> out;
    std::set<FactorId> seen;
    auto add = [&](const std::vector<FactorId>& ids) {
        for (const auto& id : ids) {
            if (seen.insert(id).second) out.push_back(id);
        }
    };
    for (std::size_t r = 0; r < cluster_scores.size() && r < static_cast<std::size_t>(std::max(k1, 0)); ++r) {
        std::vector<Scored> scored;
        for (const auto& id : space.clusters[cluster_scores[r].second].members) {
            scored.push_back({cosine_similarity(e_u, index.vector(id)), id});
        }
        add(top_k(std::move(scored), k2));
    }
    std::vector<Scored> loose;
    for (const auto& id : space.unclustered) loose.push_back({cosine_similarity(e_u, index.vector(id)), id});
    add(top_k(std::move(loose), k2));
    return out;
}

int vote_threshold(int rounds, double vote_ratio) {
    if (rounds < 1) throw DomainError("rounds must be at least 1");
    if (!(vote_ratio > 0.0 && vote_ratio <= 1.0)) throw DomainError("vote_ratio must lie in (0, 1]");
    return static_cast<int>(std::ceil(vote_ratio * rounds - 1e-9));
}

std::vector<FactorId> shuffled(std::vector<FactorId> ids, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(ids[i - 1], ids[j]);
    }
    return ids;
}

std::uint64_t presentation_seed(const Condition& condition) {
    return std::stoull(text::sha256_hex(condition.id).substr(0, 16), nullptr, 16);
}

VoteOutcome vote_filter(gateway::Gateway& gw, const Scenario& scenario, const FactorSpace& space,
                        const Condition& condition, const std::vector<FactorId>& candidates, int rounds,
                        double vote_ratio, std::uint64_t seed) {
    const int gamma = vote_threshold(rounds, vote_ratio);
    if (candidates.empty()) throw PreconditionError("vote_filter needs candidates");
    const auto names = names_of(space, candidates);
    const auto presented = texts_of(space, shuffled(candidates, seed));

    std::vector<std::set<FactorId>> selections(static_cast<std::size_t>(rounds));
    support::parallel_for(selections.size(), gw.options().max_in_flight, [&](std::size_t r) {
        const auto request = gw.render(PromptTag::MapVote,
                                       {{"scenario", scenario.description},
                                        {"condition", condition.text},
                                        {"factors", gateway::json_string_array(presented)}},
                                       static_cast<int>(r));
        const auto answer = gw.ask<gateway::StringList>(request, gateway::extract_answer_list);
        if (!answer) return;
        for (const auto& name : *answer) {
            auto it = names.find(text::normalize(name));
            if (it != names.end()) selections[r].insert(it->second);
        }
    });

    VoteOutcome outcome;
    for (const auto& id : candidates) outcome.votes[id] = 0;
    for (const auto& s : selections) {
        for (const auto& id : s) ++outcome.votes[id];
    }
    for (const auto& id : candidates) {
        if (outcome.votes[id] >= gamma) outcome.voted.push_back(id);
    }
    return outcome;
}

std::vector<FactorId> reflective_refine(gateway::Gateway& gw, const FactorSpace& space, const Condition& condition,
                                        const std::vector<FactorId>& voted) {
    if (voted.empty()) return {};
    const auto names = names_of(space, voted);
    const auto request = gw.render(PromptTag::Reflect, {{"condition", condition.text},
                                                        {"factors", gateway::json_string_array(texts_of(space, voted))}});
    const auto answer = gw.ask<gateway::StringList>(request, gateway::extract_string_array);
    if (!answer) return voted;
    std::set<FactorId> keep;
    for (const auto& name : *answer) {
        auto it = names.find(text::normalize(name));
        if (it != names.end()) keep.insert(it->second);
    }
    std::vector<FactorId> out;
    for (const auto& id : voted) {
        if (keep.count(id)) out.push_back(id);
    }
    return out;
}

MappingResult map_condition(gateway::Gateway& gw, const FactorSpace& space, const FactorIndex& index,
                            const Scenario& scenario, const Condition& condition, const MappingConfig& config) {
    MappingResult result;
    result.condition_id = condition.id;
    result.seed = presentation_seed(condition);
    vote_threshold(config.rounds, config.vote_ratio);
    if (space.empty()) return result;

    result.candidates = retrieve_candidates(gw, space, index, condition, config.k1, config.k2);
    if (result.candidates.empty()) return result;
    auto outcome = vote_filter(gw, scenario, space, condition, result.candidates, config.rounds, config.vote_ratio,
                               result.seed);
    result.votes = std::move(outcome.votes);
    result.voted = std::move(outcome.voted);
    result.final_set = reflective_refine(gw, space, condition, result.voted);
    result.abstained = result.final_set.empty();
    return result;
}

std::string mapping_result_to_json(const MappingResult& r) {
    Json votes = Json::object();
    for (const auto& [id, v] : r.votes) votes[id] = v;
    const Json j = {{"condition_id", r.condition_id}, {"candidates", r.candidates}, {"votes", votes},
                    {"voted", r.voted}, {"final", r.final_set}, {"abstained", r.abstained},
                    {"seed", std::to_string(r.seed)}};
    return j.dump();
}

MappingResult mapping_result_from_json(const std::string& json) {
    try {
        const Json j = Json::parse(json);
        MappingResult r;
        r.condition_id = j.at("condition_id").get<std::string>();
        r.candidates = j.at("candidates").get<std::vector<FactorId>>();
        for (const auto& [id, v] : j.at("votes").items()) r.votes[id] = v.get<int>();
        r.voted = j.at("voted").get<std::vector<FactorId>>();
        r.final_set = j.at("final").get<std::vector<FactorId>>();
        r.abstained = j.at("abstained").get<bool>();
        r.seed = std::stoull(j.at("seed").get<std::string>());
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed mapping result: ") + e.what());
    }
}

}  // namespace anchor::mapping
