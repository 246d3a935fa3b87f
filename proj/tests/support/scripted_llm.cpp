#include "scripted_llm.hpp"

#include <algorithm>
#include <stdexcept>

#include "anchor/gateway/providers.hpp"
#include "json.hpp"

namespace anchor::testing {
namespace {

using Json = nlohmann::ordered_json;
using gateway::PromptTag;

constexpr const char* kSentencePrefix = "The outcome depends on ";

std::string last_user_turn(const gateway::ChatRequest& request) {
    for (auto it = request.turns.rbegin(); it != request.turns.rend(); ++it) {
        if (it->role == "user") return it->text;
    }
    return {};
}

std::string final_answer(const Json& value) { return "Reasoned over the listed items.\nFinal answer: " + value.dump(); }

}  // namespace

bool words_match(const std::string& a, const std::string& b) {
    if (a == b) return true;
    return a.size() >= 5 && b.size() >= 5 && a.compare(0, 5, b, 0, 5) == 0;
}

std::string line_after(const std::string& text, const std::string& prefix) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
        pos = end + 1;
    }
    return {};
}

std::vector<std::string> json_array_after(const std::string& text, const std::string& marker) {
    const auto at = text.find(marker);
    if (at == std::string::npos) return {};
    const auto open = text.find('[', at + marker.size());
    if (open == std::string::npos) return {};
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '[') ++depth;
        else if (c == ']' && --depth == 0) {
            const auto parsed = Json::parse(text.substr(open, i - open + 1));
            std::vector<std::string> out;
            for (const auto& item : parsed) {
                if (item.is_string()) out.push_back(item.get<std::string>());
                else if (item.is_object() && item.contains("name")) out.push_back(item.at("name").get<std::string>());
            }
            return out;
        }
    }
    return {};
}

ScriptedLlm::ScriptedLlm(const std::vector<ScriptedScenario>& scenarios) : scenarios_(scenarios) {
    for (const auto& s : scenarios_) {
        for (const auto& f : s.factors) factors_[f.text] = f;
        for (const auto& l : s.latents) latents_[l.name] = l;
    }
}

std::string ScriptedLlm::sentence_for(const std::string& factor) { return kSentencePrefix + factor + "."; }

std::string ScriptedLlm::operator()(const gateway::ChatRequest& request) const {
    const auto prompt = last_user_turn(request);
    switch (request.tag) {
        case PromptTag::SentenceGen:
            return sentence_gen(prompt, request.sample);
        case PromptTag::FactorExtract:
            return factor_extract(prompt);
        case PromptTag::LabelVote:
            return label_vote(prompt);
        case PromptTag::Theme: {
            std::map<std::string, int> counts;
            for (const auto& f : json_array_after(prompt, "factors:")) {
                for (const auto& t : gateway::content_tokens(f)) ++counts[t];
            }
            std::string best;
            int best_count = 0;
            for (const auto& [token, n] : counts) {
                if (n > best_count) best = token, best_count = n;
            }
            if (best.empty()) return "General";
            best[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(best[0])));
            return best + " Aspects";
        }
        case PromptTag::Prune:
            return final_answer(json_array_after(prompt, "Factors:"));
        case PromptTag::MapVote:
            return map_vote(prompt);
        case PromptTag::Reflect:
            return final_answer(json_array_after(prompt, "Initially selected factors:"));
        case PromptTag::PhiElicit:
            return phi_elicit(prompt);
        case PromptTag::LatentDiscover:
            return latent_discover(prompt);
        case PromptTag::LatentElicit:
            return latent_elicit(prompt);
    }
    return {};
}

std::string ScriptedLlm::sentence_gen(const std::string& prompt, int sample) const {
    const auto outcome = line_after(prompt, "Outcome: ");
    const auto it = std::find_if(scenarios_.begin(), scenarios_.end(),
                                 [&](const ScriptedScenario& s) { return s.scenario.outcome1 == outcome; });
    if (it == scenarios_.end() || it->factors.empty()) return "I cannot help with that scenario.";
    const auto n_line = line_after(prompt, "Generate ");
    const std::size_t n = n_line.empty() ? 1 : std::stoul(n_line);
    const std::size_t total = it->factors.size();
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = it->factors[(static_cast<std::size_t>(sample) * n + i) % total];
        out += std::to_string(i + 1) + ". " + sentence_for(f.text) + "\n";
    }
    return out;
}

std::string ScriptedLlm::factor_extract(const std::string& prompt) const {
    Json found = Json::array();
    std::size_t pos = 0;
    const std::string prefix = kSentencePrefix;
    while ((pos = prompt.find(prefix, pos)) != std::string::npos) {
        pos += prefix.size();
        auto end = prompt.find('\n', pos);
        if (end == std::string::npos) end = prompt.size();
        auto text = prompt.substr(pos, end - pos);
        if (!text.empty() && text.back() == '.') text.pop_back();
        if (factors_.count(text)) found.push_back(text);
    }
    return "Each sentence names one factor.\nFinal answer: " + found.dump();
}

std::string ScriptedLlm::label_vote(const std::string& prompt) const {
    const auto factor = line_after(prompt, "Factor: ");
    const auto it = factors_.find(factor);
    const std::string label = it == factors_.end() ? "Both" : it->second.label;
    return "The factor bears on the outcomes as tabulated.\nFinal answer: " + Json{{factor, label}}.dump();
}

std::string ScriptedLlm::map_vote(const std::string& prompt) const {
    const auto scenario_tokens = gateway::content_tokens(line_after(prompt, "Scenario: "));
    std::vector<std::string> condition_tokens;
    for (const auto& t : gateway::content_tokens(line_after(prompt, "Condition: "))) {
        const bool generic = std::any_of(scenario_tokens.begin(), scenario_tokens.end(),
                                         [&](const std::string& s) { return words_match(s, t); });
        if (!generic) condition_tokens.push_back(t);
    }
    Json selected = Json::array();
    for (const auto& candidate : json_array_after(prompt, "Candidate factors:")) {
        const auto tokens = gateway::content_tokens(candidate);
        const bool related = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
            return std::any_of(condition_tokens.begin(), condition_tokens.end(),
                               [&](const std::string& c) { return words_match(c, t); });
        });
        if (related) selected.push_back(candidate);
    }
    return final_answer(Json{{"answer", selected}});
}

std::string ScriptedLlm::phi_elicit(const std::string& prompt) const {
    Json out = Json::object();
    for (const auto& f : json_array_after(prompt, "Factor values:")) {
        const auto it = factors_.find(f);
        if (it != factors_.end()) out[f] = it->second.phi;
    }
    return "Thought: each factor is weighed against both outcomes.\nFinal answer:\n" + out.dump(1);
}

std::string ScriptedLlm::latent_discover(const std::string& prompt) const {
    std::vector<std::string> order;
    std::map<std::string, Json> groups;
    for (const auto& f : json_array_after(prompt, "Factors:")) {
        const auto it = factors_.find(f);
        if (it == factors_.end()) continue;
        const auto& name = it->second.latent;
        if (!groups.count(name)) {
            order.push_back(name);
            groups[name] = Json::array();
        }
        groups[name].push_back(f);
    }
    Json latents = Json::array();
    for (const auto& name : order) latents.push_back({{"name", name}, {"factors", groups[name]}});
    return "Thought: factors grouped by shared mechanism.\nFinal answer:\n" + Json{{"latents", latents}}.dump(1);
}

std::string ScriptedLlm::latent_elicit(const std::string& prompt) const {
    Json out = Json::object();
    for (const auto& name : json_array_after(prompt, "Latents with factors:")) {
        const auto it = latents_.find(name);
        if (it != latents_.end()) out[name] = {it->second.p1, it->second.p0};
    }
    return "Thought: each latent summarizes its factors.\nFinal answer:\n" + out.dump(1);
}

}  // namespace anchor::testing
