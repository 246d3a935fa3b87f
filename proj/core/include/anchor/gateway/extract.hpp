#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "anchor/domain/types.hpp"
#include "anchor/gateway/chat.hpp"

namespace anchor::gateway {

using StringList = std::vector<std::string>;
using LabelMap = std::vector<std::pair<std::string, FactorLabel>>;
using ProbabilityMap = std::vector<std::pair<std::string, double>>;
using ProbabilityPairMap = std::vector<std::pair<std::string, std::pair<double, double>>>;

struct LatentSpec {
    std::string name;
    StringList factors;

    friend bool operator==(const LatentSpec&, const LatentSpec&) = default;
};
using LatentList = std::vector<LatentSpec>;

using Payload = std::variant<StringList, LabelMap, ProbabilityMap, LatentList, ProbabilityPairMap, std::string>;

// Scans `raw` for the last well-formed payload matching the schema of `tag`.
// Prompts ask for "Final answer:" followed by JSON, but any position counts.
// Throws ParseError when nothing matches.
Payload extract_structured(std::string_view raw, PromptTag tag);

// Typed entry points, one per schema.
StringList extract_sentences(std::string_view raw);        // numbered list, one per line
StringList extract_string_array(std::string_view raw);     // ["a", "b"]
StringList extract_answer_list(std::string_view raw);      // {"answer": [...]} or a bare array
LabelMap extract_label_map(std::string_view raw);          // {"name": "Outcome1"}
ProbabilityMap extract_probability_map(std::string_view raw);
LatentList extract_latents(std::string_view raw);          // {"latents": [{"name", "factors"}]}
ProbabilityPairMap extract_probability_pairs(std::string_view raw);  // {"name": [p1, p0]}
std::string extract_theme(std::string_view raw);           // first non-empty line, 1-3 words kept verbatim

// Maps an answer word from the label vote prompt; "Both" is neutral.
std::optional<FactorLabel> label_from_answer(std::string_view answer) noexcept;

}  // namespace anchor::gateway
