#include "anchor/inference/inference.hpp"

#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/gateway/extract.hpp"
#include "anchor/support/parallel.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::inference {

using gateway::PromptTag;

std::string_view to_string(Decision decision) noexcept {
    switch (decision) {
        case Decision::O1: return "O1";
        case Decision::O2: return "O2";
        case Decision::Unknown: break;
    }
    return "Unknown";
}

std::map<FactorId, ElicitedPhi> elicit_factor_posteriors(gateway::Gateway& gw, const Scenario& scenario,
                                                         const std::vector<Factor>& factors, double clamp) {
    if (factors.empty()) throw PreconditionError("no factors to elicit");
    std::map<FactorId, ElicitedPhi> out;
    for (const auto& f : factors) {
        out[f.id] = {smooth_probability(label_prior(f.label.value_or(FactorLabel::Neutral)), clamp),
                     Provenance::LabelInitialized};
    }

    const std::size_t chunks = (factors.size() + kPhiChunk - 1) / kPhiChunk;
    std::vector<std::optional<gateway::ProbabilityMap>> answers(chunks);
    support::parallel_for(chunks, gw.options().max_in_flight, [&](std::size_t c) {
        std::vector<std::string> names;
        Json priors = Json::object();
        for (std::size_t i = c * kPhiChunk; i < std::min(factors.size(), (c + 1) * kPhiChunk); ++i) {
            names.push_back(factors[i].text);
            priors[factors[i].text] = label_prior(factors[i].label.value_or(FactorLabel::Neutral));
        }
        const auto request = gw.render(PromptTag::PhiElicit, {{"scenario", scenario.description},
                                                              {"outcome1", scenario.outcome1},
                                                              {"outcome2", scenario.outcome2},
                                                              {"prior_text", priors.dump()},
                                                              {"factors", gateway::json_string_array(names)}});
        answers[c] = gw.ask<gateway::ProbabilityMap>(request, gateway::extract_probability_map);
    });

    std::map<std::string, FactorId> by_name;
    for (const auto& f : factors) by_name.emplace(text::normalize(f.text), f.id);
    for (const auto& answer : answers) {
        if (!answer) continue;
        for (const auto& [name, p] : *answer) {
            auto it = by_name.find(text::normalize(name));
            if (it == by_name.end()) continue;
            auto& slot = out[it->second];
            if (slot.provenance == Provenance::Elicited) continue;
            slot = {smooth_probability(p, clamp), Provenance::Elicited};
        }
    }
    return out;
}

std::vector<LatentAssignment> discover_latents(gateway::Gateway& gw, const std::vector<Factor>& factors) {
    if (factors.empty()) throw PreconditionError("no factors to group");
    std::vector<std::string> names;
    std::map<std::string, FactorId> by_name;
    std::vector<FactorId> all;
    for (const auto& f : factors) {
        names.push_back(f.text);
        all.push_back(f.id);
        by_name.emplace(text::normalize(f.text), f.id);
    }
    const auto request = gw.render(PromptTag::LatentDiscover, {{"factors", gateway::json_string_array(names)}});
    const auto answer = gw.ask<gateway::LatentList>(request, gateway::extract_latents);
    if (!answer) return {{kAllLatent, all}};

    std::vector<LatentAssignment> out;
    std::set<FactorId> assigned;
    std::set<std::string> used_names;
    for (const auto& entry : *answer) {
        LatentAssignment latent;
        latent.name = text::canonicalize(entry.name);
        if (latent.name.empty()) latent.name = "Latent" + std::to_string(out.size() + 1);
        for (const auto& name : entry.factors) {
            auto it = by_name.find(text::normalize(name));
            if (it == by_name.end() || !assigned.insert(it->second).second) continue;
            latent.members.push_back(it->second);
        }
        if (latent.members.empty()) continue;
        std::string unique = latent.name;
        for (int k = 2; !used_names.insert(unique).second; ++k) unique = latent.name + " (" + std::to_string(k) + ")";
        latent.name = unique;
        out.push_back(std::move(latent));
    }
    LatentAssignment residual{kResidualLatent, {}};
    for (const auto& id : all) {
        if (!assigned.count(id)) residual.members.push_back(id);
    }
    if (!residual.members.empty()) {
        for (int k = 2; used_names.count(residual.name); ++k) {
            residual.name = std::string(kResidualLatent) + " (" + std::to_string(k) + ")";
        }
        out.push_back(std::move(residual));
    }
    return out;
}

std::vector<LatentVariable> elicit_latent_conditionals(gateway::Gateway& gw, const Scenario& scenario,
                                                       const std::vector<LatentAssignment>& latents,
                                                       const std::map<FactorId, Factor>& factors,
                                                       const InferenceConfig& config) {
    if (latents.empty()) throw PreconditionError("no latents to parameterize");
    Json listing = Json::array();
    for (const auto& l : latents) {
        std::vector<std::string> texts;
        for (const auto& id : l.members) texts.push_back(factors.at(id).text);
        listing.push_back({{"name", l.name}, {"factors", texts}});
    }
    const auto request = gw.render(PromptTag::LatentElicit, {{"latents", listing.dump(2)},
                                                             {"outcome1", scenario.outcome1},
                                                             {"outcome2", scenario.outcome2}});
    const auto answer = gw.ask<gateway::ProbabilityPairMap>(request, gateway::extract_probability_pairs);

    std::map<std::string, std::pair<double, double>> elicited;
    if (answer) {
        for (const auto& [name, pair] : *answer) elicited.emplace(text::normalize(name), pair);
    }
    std::vector<LatentVariable> out;
    for (const auto& l : latents) {
        LatentVariable v{l.name, l.members, 0.5, 0.5};
        auto it = elicited.find(text::normalize(l.name));
        std::pair<double, double> p;
        if (it != elicited.end()) {
            p = it->second;
        } else {
            double c1 = 0, c2 = 0, cn = 0;
            for (const auto& id : l.members) {
                switch (factors.at(id).label.value_or(FactorLabel::Neutral)) {
                    case FactorLabel::SupportsO1: ++c1; break;
                    case FactorLabel::SupportsO2: ++c2; break;
                    case FactorLabel::Neutral: ++cn; break;
                }
            }
            p = latent_cpt_from_counts(c1, c2, cn, config.epsilon_smooth);
        }
        v.p_given_o1 = smooth_probability(p.first, config.clamp);
        v.p_given_o2 = smooth_probability(p.second, config.clamp);
        out.push_back(std::move(v));
    }
    return out;
}

Decision decide(double p_final, double tau, bool* abstained) {
    const bool below = std::max(p_final, 1.0 - p_final) < tau;
    if (abstained) *abstained = below;
    if (below || p_final == 0.5) return Decision::Unknown;
    return p_final > 0.5 ? Decision::O1 : Decision::O2;
}

PosteriorReport infer(gateway::Gateway& gw, const Scenario& scenario, const FactorSpace& space,
                      const mapping::MappingResult& mapping, const InferenceConfig& config) {
    PosteriorReport report;
    report.condition_id = mapping.condition_id;
    if (mapping.abstained || mapping.final_set.empty()) return report;

    std::vector<Factor> mapped;
    std::vector<Factor> to_elicit;
    for (const auto& id : mapping.final_set) {
        mapped.push_back(space.factor(id));
        if (mapped.back().phi) {
            report.phis[id] = {smooth_probability(*mapped.back().phi, config.clamp), mapped.back().provenance};
        } else {
            to_elicit.push_back(mapped.back());
        }
    }
    if (!to_elicit.empty()) {
        for (auto& [id, phi] : elicit_factor_posteriors(gw, scenario, to_elicit, config.clamp)) report.phis[id] = phi;
    }

    LatentBayesModel model;
    model.scenario_id = scenario.id;
    for (const auto& [id, phi] : report.phis) model.factor_params[id] = phi.phi;
    EvidenceSet evidence{mapping.final_set};

    report.p_nb = nb_posterior(model, evidence);

    const auto assignment = discover_latents(gw, mapped);
    report.latents = elicit_latent_conditionals(gw, scenario, assignment, space.factors, config);
    model.latents = report.latents;
    report.p_cbn = cbn_posterior(model, evidence);

    if (config.aggregator == Aggregator::LOP) {
        report.p_final = aggregate_lop(*report.p_nb, *report.p_cbn, config.w_nb, config.w_cbn);
    } else {
        report.p_final = aggregate_bma({*report.p_nb, 1.0 - *report.p_nb}, {*report.p_cbn, 1.0 - *report.p_cbn});
    }
    report.decision = decide(*report.p_final, config.tau, &report.abstained);
    return report;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string posterior_report_to_json(const PosteriorReport& r) {
    Json phis = Json::object();
    for (const auto& [id, phi] : r.phis) {
        phis[id] = {{"phi", phi.phi}, {"provenance", std::string(anchor::to_string(phi.provenance))}};
    }
    Json latents = Json::array();
    for (const auto& l : r.latents) {
        latents.push_back({{"name", l.name}, {"members", l.members}, {"p_given_o1", l.p_given_o1},
                           {"p_given_o2", l.p_given_o2}});
    }
    const Json j = {{"condition_id", r.condition_id}, {"p_nb", optional_number(r.p_nb)},
                    {"p_cbn", optional_number(r.p_cbn)}, {"p_final", optional_number(r.p_final)},
                    {"abstained", r.abstained}, {"decision", std::string(to_string(r.decision))},
                    {"phis", phis}, {"latents", latents}};
    return j.dump();
}

PosteriorReport posterior_report_from_json(const std::string& json) {
    try {
        const Json j = Json::parse(json);
        PosteriorReport r;
        r.condition_id = j.at("condition_id").get<std::string>();
        r.p_nb = read_optional(j, "p_nb");
        r.p_cbn = read_optional(j, "p_cbn");
        r.p_final = read_optional(j, "p_final");
        r.abstained = j.at("abstained").get<bool>();
        const auto d = j.at("decision").get<std::string>();
        r.decision = d == "O1" ? Decision::O1 : d == "O2" ? Decision::O2 : Decision::Unknown;
        for (const auto& [id, v] : j.at("phis").items()) {
            auto prov = provenance_from_string(v.at("provenance").get<std::string>());
            if (!prov) throw ParseError("unknown provenance for " + id);
            r.phis[id] = {v.at("phi").get<double>(), *prov};
        }
        for (const auto& l : j.at("latents")) {
            r.latents.push_back({l.at("name").get<std::string>(), l.at("members").get<std::vector<FactorId>>(),
                                 l.at("p_given_o1").get<double>(), l.at("p_given_o2").get<double>()});
        }
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed posterior report: ") + e.what());
    }
}

}  // namespace anchor::inference
