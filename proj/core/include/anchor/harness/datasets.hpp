#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/domain/types.hpp"

namespace anchor::harness {

enum class PairGold { Context1, Context2, Same };
enum class DecisionGold { O1, O2 };

std::string_view to_string(PairGold gold) noexcept;
std::string_view to_string(DecisionGold gold) noexcept;

struct PairwiseInstance {
    Scenario scenario;
    Condition condition1;
    Condition condition2;
    PairGold gold = PairGold::Same;
};

struct DecisionInstance {
    Scenario scenario;
    Condition condition;
    DecisionGold gold = DecisionGold::O1;
};

template <typename T>
struct Dataset {
    std::vector<T> instances;
    std::vector<std::string> warnings;
};

// Stable condition id: "c" + 16 hex digits of SHA-256 over scenario id and
// canonical text.
std::string condition_id(std::string_view scenario_id, std::string_view text);

// Line-delimited JSON records. Pairwise fields: scenario_id, scenario,
// outcome1, outcome2, condition1, condition2, gold (Context1|Context2|Same).
// Decision fields: scenario_id, scenario (may be empty), outcome1, outcome2,
// condition, gold (O1|O2). IoError when unreadable; SchemaError(line) on a bad
// record.
Dataset<PairwiseInstance> load_pairwise(const std::filesystem::path& path);
Dataset<DecisionInstance> load_decision(const std::filesystem::path& path);

// Scenarios in order of first appearance with their distinct conditions.
struct ScenarioBundle {
    Scenario scenario;
    std::vector<Condition> conditions;
};

std::vector<ScenarioBundle> group_by_scenario(const std::vector<PairwiseInstance>& instances);
std::vector<ScenarioBundle> group_by_scenario(const std::vector<DecisionInstance>& instances);

}  // namespace anchor::harness
