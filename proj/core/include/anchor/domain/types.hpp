#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anchor {

using FactorId = std::string;
using Vector = std::vector<double>;

// A decision scenario with two competing outcomes. `description` may be empty
// (fact-checking datasets carry only the claim).
struct Scenario {
    std::string id;
    std::string description;
    std::string outcome1;
    std::string outcome2;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Condition {
    std::string id;
    std::string text;
    std::string scenario_id;

    friend bool operator==(const Condition&, const Condition&) = default;
};

enum class FactorLabel { SupportsO1, SupportsO2, Neutral };

enum class Provenance { Elicited, LabelInitialized };

std::string_view to_string(FactorLabel label) noexcept;
std::optional<FactorLabel> factor_label_from_string(std::string_view text) noexcept;
std::string_view to_string(Provenance provenance) noexcept;
std::optional<Provenance> provenance_from_string(std::string_view text) noexcept;

// One atomic evidence statement. `text` is the whitespace-canonical display
// form; identity is the content hash of its normalized form.
struct Factor {
    FactorId id;
    std::string text;
    std::optional<FactorLabel> label;
    std::optional<double> phi;
    Provenance provenance = Provenance::LabelInitialized;

    friend bool operator==(const Factor&, const Factor&) = default;
};

// Builds a factor whose id is derived from `text`.
Factor make_factor(std::string_view text, std::optional<FactorLabel> label = std::nullopt);

struct FactorCluster {
    std::string theme;
    std::vector<FactorId> members;
    std::optional<Vector> prototype;

    friend bool operator==(const FactorCluster&, const FactorCluster&) = default;
};

struct SpaceStats {
    int rounds_used = 0;
    std::size_t factors_generated = 0;
    std::size_t clusters_found = 0;

    friend bool operator==(const SpaceStats&, const SpaceStats&) = default;
};

// Two-level factor hierarchy: themed clusters plus the density-noise pool.
struct FactorSpace {
    std::string scenario_id;
    std::vector<FactorCluster> clusters;
    std::vector<FactorId> unclustered;
    std::map<FactorId, Factor> factors;
    SpaceStats stats;

    const Factor& factor(const FactorId& id) const;
    bool empty() const noexcept { return clusters.empty() && unclustered.empty(); }

    friend bool operator==(const FactorSpace&, const FactorSpace&) = default;
};

// Returns one human-readable description per violated FactorSpace invariant.
// Empty iff the space is well formed.
std::vector<std::string> validate_factor_space(const FactorSpace& space);

}  // namespace anchor
