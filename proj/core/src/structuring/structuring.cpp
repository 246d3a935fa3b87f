#include "anchor/structuring/structuring.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/gateway/extract.hpp"
#include "anchor/support/parallel.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::structuring {

using gateway::PromptTag;

std::vector<std::string> uniquify_themes(std::vector<std::string> themes) {
    std::map<std::string, int> seen;
    std::set<std::string> taken;
    for (const auto& t : themes) taken.insert(text::normalize(t));
    std::set<std::string> used;
    for (auto& theme : themes) {
        const auto key = text::normalize(theme);
        if (used.insert(key).second) continue;
        int& k = seen[key];
        if (k == 0) k = 1;
        std::string candidate;
        do {
            candidate = theme + " (" + std::to_string(++k) + ")";
        } while (taken.count(text::normalize(candidate)) || used.count(text::normalize(candidate)));
        used.insert(text::normalize(candidate));
        theme = candidate;
    }
    return themes;
}

std::vector<std::string> theme_clusters(gateway::Gateway& gw, const Scenario& scenario,
                                        const std::vector<std::vector<std::string>>& clusters) {
    (void)scenario;
    std::vector<std::string> themes(clusters.size());
    support::parallel_for(clusters.size(), gw.options().max_in_flight, [&](std::size_t i) {
        if (clusters[i].empty()) throw PreconditionError("cannot theme an empty cluster");
        const auto request = gw.render(PromptTag::Theme, {{"factors", gateway::json_string_array(clusters[i])}});
        themes[i] = gw.ask<std::string>(request, gateway::extract_theme)
                        .value_or("Cluster " + std::to_string(i + 1));
    });
    return uniquify_themes(std::move(themes));
}

FactorSpace prune_redundancy(gateway::Gateway& gw, const Scenario& scenario, FactorSpace space) {
    std::vector<std::optional<std::vector<FactorId>>> keeps(space.clusters.size());
    support::parallel_for(space.clusters.size(), gw.options().max_in_flight, [&](std::size_t c) {
        const auto& cluster = space.clusters[c];
        if (cluster.members.size() < 2) return;
        std::vector<std::string> texts;
        Json labels = Json::object();
        std::map<std::string, FactorId> by_key;
        for (const auto& id : cluster.members) {
            const auto& f = space.factor(id);
            texts.push_back(f.text);
            const auto label = f.label.value_or(FactorLabel::Neutral);
            labels[f.text] = label == FactorLabel::SupportsO1   ? "Outcome1"
                             : label == FactorLabel::SupportsO2 ? "Outcome2"
                                                                : "Both";
            by_key.emplace(text::normalize(f.text), id);
        }
        const auto request = gw.render(PromptTag::Prune, {{"scenario", scenario.description},
                                                          {"theme", cluster.theme},
                                                          {"factors", gateway::json_string_array(texts)},
                                                          {"labels", labels.dump()}});
        const auto answer = gw.ask<gateway::StringList>(request, gateway::extract_string_array);
        if (!answer) return;
        std::set<FactorId> keep;
        for (const auto& name : *answer) {
            auto it = by_key.find(text::normalize(name));
            if (it != by_key.end()) keep.insert(it->second);
        }
        if (keep.empty()) return;
        std::vector<FactorId> ordered;
        for (const auto& id : cluster.members) {
            if (keep.count(id)) ordered.push_back(id);
        }
        keeps[c] = std::move(ordered);
    });

    for (std::size_t c = 0; c < space.clusters.size(); ++c) {
        if (!keeps[c]) continue;
        auto& cluster = space.clusters[c];
        for (const auto& id : cluster.members) {
            if (std::find(keeps[c]->begin(), keeps[c]->end(), id) == keeps[c]->end()) space.factors.erase(id);
        }
        cluster.members = std::move(*keeps[c]);
    }
    return space;
}

Vector mean_vector(const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw DomainError("mean of no vectors");
    Vector mean(vectors.front().size(), 0.0);
    for (const auto& v : vectors) {
        if (v.size() != mean.size()) throw DomainError("vectors differ in dimension");
        for (std::size_t j = 0; j < v.size(); ++j) mean[j] += v[j];
    }
    for (double& x : mean) x /= static_cast<double>(vectors.size());
    return mean;
}

Vector cluster_prototype(const Vector& theme_vec, const std::vector<Vector>& member_vecs, double alpha) {
    if (member_vecs.empty()) throw DomainError("cluster prototype needs at least one member");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    const Vector mean = mean_vector(member_vecs);
    if (theme_vec.size() != mean.size()) throw DomainError("theme and member vectors differ in dimension");
    Vector out(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) out[j] = alpha * theme_vec[j] + (1.0 - alpha) * mean[j];
    return out;
}

namespace {

FactorSpace single_cluster(FactorSpace space, const std::vector<FactorId>& order, const std::vector<Vector>& vecs) {
    FactorCluster cluster;
    cluster.theme = kDefaultTheme;
    cluster.members = order;
    cluster.prototype = mean_vector(vecs);
    space.clusters = {std::move(cluster)};
    space.unclustered.clear();
    return space;
}

}  // namespace

FactorSpace build_hierarchy(gateway::Gateway& gw, const abduction::AbductionState& pool, const Scenario& scenario,
                            const PipelineConfig& config, bool clustering_enabled, StructuringBackends backends) {
    FactorSpace space;
    space.scenario_id = scenario.id;
    space.stats.rounds_used = pool.round;
    space.stats.factors_generated = pool.pool.size();

    std::vector<FactorId> order;
    std::vector<std::string> texts;
    for (const auto& f : pool.pool) {
        if (!f.label) throw PreconditionError("factor pool is not labeled: " + f.id);
        if (!space.factors.emplace(f.id, f).second) continue;
        order.push_back(f.id);
        texts.push_back(f.text);
    }
    if (order.empty()) return space;

    const std::vector<Vector> vecs = gw.embed(texts);
    const int n = static_cast<int>(order.size());
    const bool dense_enough = n >= 2 && n >= 2 * derive_cluster_params(std::max(n, 2)).min_cluster_size;
    if (!clustering_enabled || !dense_enough) return single_cluster(std::move(space), order, vecs);

    PcaReduction default_reduction;
    DensityClustering default_clustering;
    ReductionBackend& reducer = backends.reduction ? *backends.reduction : default_reduction;
    ClusteringBackend& clusterer = backends.clustering ? *backends.clustering : default_clustering;

    const auto reduced = reducer.reduce(vecs, derive_reduction_params(n));
    const auto found = clusterer.cluster(reduced, derive_cluster_params(n));
    space.stats.clusters_found = found.clusters.size();
    if (found.clusters.empty()) return single_cluster(std::move(space), order, vecs);

    std::vector<std::vector<std::string>> member_texts;
    for (const auto& c : found.clusters) {
        FactorCluster cluster;
        std::vector<std::string> names;
        for (std::size_t i : c) {
            cluster.members.push_back(order[i]);
            names.push_back(texts[i]);
        }
        space.clusters.push_back(std::move(cluster));
        member_texts.push_back(std::move(names));
    }
    for (std::size_t i : found.noise) space.unclustered.push_back(order[i]);

    const auto themes = theme_clusters(gw, scenario, member_texts);
    for (std::size_t c = 0; c < themes.size(); ++c) space.clusters[c].theme = themes[c];

    space = prune_redundancy(gw, scenario, std::move(space));

    std::map<FactorId, const Vector*> vec_of;
    for (std::size_t i = 0; i < order.size(); ++i) vec_of[order[i]] = &vecs[i];
    const auto theme_vecs = gw.embed(themes);
    for (std::size_t c = 0; c < space.clusters.size(); ++c) {
        std::vector<Vector> members;
        for (const auto& id : space.clusters[c].members) members.push_back(*vec_of.at(id));
        space.clusters[c].prototype = cluster_prototype(theme_vecs[c], members, config.mapping.alpha);
    }
    return space;
}

}  // namespace anchor::structuring
