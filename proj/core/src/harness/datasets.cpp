#include "anchor/harness/datasets.hpp"

#include <fstream>
#include <map>
#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::harness {
namespace {

std::string required_text(const Json& record, const char* key, std::size_t line, bool allow_empty = false) {
    if (!record.contains(key)) throw SchemaError(line, std::string("missing field '") + key + "'");
    const auto& v = record.at(key);
    if (!v.is_string()) throw SchemaError(line, std::string("field '") + key + "' must be a string");
    auto s = text::canonicalize(v.get<std::string>());
    if (!allow_empty && s.empty()) throw SchemaError(line, std::string("field '") + key + "' is empty");
    return s;
}

Scenario read_scenario(const Json& record, std::size_t line) {
    Scenario s;
    s.id = required_text(record, "scenario_id", line);
    s.description = required_text(record, "scenario", line, /*allow_empty=*/true);
    s.outcome1 = required_text(record, "outcome1", line);
    s.outcome2 = required_text(record, "outcome2", line);
    if (text::normalize(s.outcome1) == text::normalize(s.outcome2)) {
        throw SchemaError(line, "outcome1 and outcome2 are identical");
    }
    return s;
}

Condition make_condition(const Scenario& scenario, std::string text_value) {
    return {condition_id(scenario.id, text_value), std::move(text_value), scenario.id};
}

template <typename T, typename Parse>
Dataset<T> load_lines(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    Dataset<T> out;
    std::map<std::string, Scenario> scenarios;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::canonicalize(line).empty()) continue;
        Json record = Json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded() || !record.is_object()) throw SchemaError(number, "not a JSON object");
        T instance = parse(record, number);
        auto [it, inserted] = scenarios.emplace(instance.scenario.id, instance.scenario);
        if (!inserted && !(it->second == instance.scenario)) {
            throw SchemaError(number, "scenario '" + instance.scenario.id + "' redefined with different fields");
        }
        out.instances.push_back(std::move(instance));
    }
    if (out.instances.empty()) out.warnings.push_back("dataset " + path.string() + " contains no records");
    return out;
}

template <typename T, typename Conditions>
std::vector<ScenarioBundle> group(const std::vector<T>& instances, Conditions conditions_of) {
    std::vector<ScenarioBundle> out;
    std::map<std::string, std::size_t> index;
    std::set<std::string> seen;
    for (const auto& inst : instances) {
        auto [it, inserted] = index.emplace(inst.scenario.id, out.size());
        if (inserted) out.push_back({inst.scenario, {}});
        for (const Condition* c : conditions_of(inst)) {
            if (seen.insert(c->id).second) out[it->second].conditions.push_back(*c);
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(PairGold gold) noexcept {
    switch (gold) {
        case PairGold::Context1: return "Context1";
        case PairGold::Context2: return "Context2";
        case PairGold::Same: break;
    }
    return "Same";
}

std::string_view to_string(DecisionGold gold) noexcept { return gold == DecisionGold::O1 ? "O1" : "O2"; }

std::string condition_id(std::string_view scenario_id, std::string_view text_value) {
    std::string key(scenario_id);
    key += '\n';
    key += text::canonicalize(text_value);
    return "c" + text::sha256_hex(key).substr(0, 16);
}

Dataset<PairwiseInstance> load_pairwise(const std::filesystem::path& path) {
    return load_lines<PairwiseInstance>(path, [](const Json& r, std::size_t line) {
        PairwiseInstance inst;
        inst.scenario = read_scenario(r, line);
        inst.condition1 = make_condition(inst.scenario, required_text(r, "condition1", line));
        inst.condition2 = make_condition(inst.scenario, required_text(r, "condition2", line));
        const auto gold = required_text(r, "gold", line);
        if (gold == "Context1") {
            inst.gold = PairGold::Context1;
        } else if (gold == "Context2") {
            inst.gold = PairGold::Context2;
        } else if (gold == "Same") {
            inst.gold = PairGold::Same;
        } else {
            throw SchemaError(line, "gold must be Context1, Context2 or Same");
        }
        return inst;
    });
}

Dataset<DecisionInstance> load_decision(const std::filesystem::path& path) {
    return load_lines<DecisionInstance>(path, [](const Json& r, std::size_t line) {
        DecisionInstance inst;
        inst.scenario = read_scenario(r, line);
        inst.condition = make_condition(inst.scenario, required_text(r, "condition", line));
        const auto gold = required_text(r, "gold", line);
        if (gold == "O1") {
            inst.gold = DecisionGold::O1;
        } else if (gold == "O2") {
            inst.gold = DecisionGold::O2;
        } else {
            throw SchemaError(line, "gold must be O1 or O2");
        }
        return inst;
    });
}

std::vector<ScenarioBundle> group_by_scenario(const std::vector<PairwiseInstance>& instances) {
    return group(instances, [](const PairwiseInstance& i) {
        return std::vector<const Condition*>{&i.condition1, &i.condition2};
    });
}

std::vector<ScenarioBundle> group_by_scenario(const std::vector<DecisionInstance>& instances) {
    return group(instances, [](const DecisionInstance& i) { return std::vector<const Condition*>{&i.condition}; });
}

}  // namespace anchor::harness
