#include "anchor/domain/types.hpp"

#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"

namespace anchor {

std::string_view to_string(FactorLabel label) noexcept {
    switch (label) {
        case FactorLabel::SupportsO1: return "SupportsO1";
        case FactorLabel::SupportsO2: return "SupportsO2";
        case FactorLabel::Neutral: return "Neutral";
    }
    return "Neutral";
}

std::optional<FactorLabel> factor_label_from_string(std::string_view text) noexcept {
    if (text == "SupportsO1") return FactorLabel::SupportsO1;
    if (text == "SupportsO2") return FactorLabel::SupportsO2;
    if (text == "Neutral") return FactorLabel::Neutral;
    return std::nullopt;
}

std::string_view to_string(Provenance provenance) noexcept {
    return provenance == Provenance::Elicited ? "Elicited" : "LabelInitialized";
}

std::optional<Provenance> provenance_from_string(std::string_view text) noexcept {
    if (text == "Elicited") return Provenance::Elicited;
    if (text == "LabelInitialized") return Provenance::LabelInitialized;
    return std::nullopt;
}

Factor make_factor(std::string_view text, std::optional<FactorLabel> label) {
    Factor factor;
    factor.text = text::canonicalize(text);
    factor.id = text::content_id(factor.text);
    factor.label = label;
    return factor;
}

const Factor& FactorSpace::factor(const FactorId& id) const {
    auto it = factors.find(id);
    if (it == factors.end()) throw PreconditionError("unknown factor id: " + id);
    return it->second;
}

std::vector<std::string> validate_factor_space(const FactorSpace& space) {
    std::vector<std::string> violations;
    std::set<FactorId> seen;
    std::set<FactorId> reported_duplicates;
    std::set<std::string> normalized_texts;

    auto visit = [&](const FactorId& id) {
        if (!space.factors.contains(id)) {
            violations.push_back("dangling reference: " + id);
            return;
        }
        if (!seen.insert(id).second && reported_duplicates.insert(id).second) {
            violations.push_back("duplicate membership: " + id);
        }
    };

    for (const auto& cluster : space.clusters) {
        if (cluster.members.empty()) violations.push_back("empty cluster: " + cluster.theme);
        for (const auto& id : cluster.members) visit(id);
    }
    for (const auto& id : space.unclustered) visit(id);

    for (const auto& [id, factor] : space.factors) {
        if (factor.id != id) violations.push_back("id mismatch: " + id);
        if (!seen.contains(id)) violations.push_back("unassigned factor: " + id);
        if (!normalized_texts.insert(text::normalize(factor.text)).second) {
            violations.push_back("duplicate text: " + id);
        }
        if (factor.phi && (*factor.phi < 0.0 || *factor.phi > 1.0)) {
            violations.push_back("phi out of range: " + id);
        }
    }
    return violations;
}

}  // namespace anchor
