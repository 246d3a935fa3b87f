#include "anchor/domain/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "internal/json_fwd.hpp"

namespace anchor {
namespace {

void require(bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + " must be " + rule);
}

template <typename T>
void read_field(const Json& section, const char* section_name, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string(section_name) + "." + key + " has the wrong type");
    }
}

void reject_unknown(const Json& section, const char* section_name,
                    std::initializer_list<const char*> known) {
    if (!section.is_object()) throw ConfigError(std::string(section_name) + " must be an object");
    for (const auto& [key, value] : section.items()) {
        bool found = false;
        for (const char* k : known) found = found || key == k;
        if (!found) throw ConfigError("unknown config key: " + std::string(section_name) + "." + key);
    }
}

}  // namespace

PipelineConfig PipelineConfig::long_context() {
    PipelineConfig config;
    config.abduction.n_target = 40;
    config.abduction.batch = 5;
    config.abduction.max_rounds = 10;
    return config;
}

void PipelineConfig::validate() const {
    require(abduction.n_target >= 0, "abduction.n_target", ">= 0");
    require(abduction.batch >= 1, "abduction.batch", ">= 1");
    require(abduction.max_rounds >= 1, "abduction.max_rounds", ">= 1");
    require(abduction.label_votes >= 1 && abduction.label_votes % 2 == 1, "abduction.label_votes",
            "a positive odd integer");

    require(mapping.k1 >= 1, "mapping.k1", ">= 1");
    require(mapping.k2 >= 1, "mapping.k2", ">= 1");
    require(mapping.alpha >= 0.0 && mapping.alpha <= 1.0, "mapping.alpha", "in [0, 1]");
    require(mapping.rounds >= 1, "mapping.rounds", ">= 1");
    require(mapping.vote_ratio > 0.0 && mapping.vote_ratio <= 1.0, "mapping.vote_ratio", "in (0, 1]");

    require(inference.epsilon_smooth > 0.0, "inference.epsilon_smooth", "> 0");
    require(inference.clamp > 0.0 && inference.clamp < 0.5, "inference.clamp", "in (0, 0.5)");
    require(inference.tau >= 0.0 && inference.tau < 1.0, "inference.tau", "in [0, 1)");
    require(inference.w_nb >= 0.0 && inference.w_nb <= 1.0, "inference.w_nb", "in [0, 1]");
    require(inference.w_cbn >= 0.0 && inference.w_cbn <= 1.0, "inference.w_cbn", "in [0, 1]");
    if (inference.aggregator == Aggregator::LOP) {
        require(std::abs(inference.w_nb + inference.w_cbn - 1.0) <= 1e-9, "inference.w_nb + inference.w_cbn",
                "1 for LOP");
    }
    require(inference.elicit_retries >= 1, "inference.elicit_retries", ">= 1");
    require(inference.temperature >= 0.0, "inference.temperature", ">= 0");

    require(decision.tau_dec > 0.0 && decision.tau_dec < 1.0, "decision.tau_dec", "in (0, 1)");
}

std::string PipelineConfig::space_digest(std::string_view embedding_model) const {
    Json key = {
        {"n_target", abduction.n_target},
        {"batch", abduction.batch},
        {"max_rounds", abduction.max_rounds},
        {"label_votes", abduction.label_votes},
        {"alpha", mapping.alpha},
        {"elicit_retries", inference.elicit_retries},
        {"temperature", inference.temperature},
        {"embedding_model", embedding_model},
    };
    return text::sha256_hex(key.dump()).substr(0, 16);
}

std::string_view to_string(Aggregator aggregator) noexcept {
    return aggregator == Aggregator::LOP ? "LOP" : "BMA";
}

PipelineConfig config_from_json(std::string_view document) {
    Json root;
    try {
        root = Json::parse(document);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "config", {"abduction", "mapping", "inference", "decision"});

    PipelineConfig config;
    if (root.contains("abduction")) {
        const auto& s = root["abduction"];
        reject_unknown(s, "abduction", {"n_target", "batch", "max_rounds", "label_votes"});
        read_field(s, "abduction", "n_target", config.abduction.n_target);
        read_field(s, "abduction", "batch", config.abduction.batch);
        read_field(s, "abduction", "max_rounds", config.abduction.max_rounds);
        read_field(s, "abduction", "label_votes", config.abduction.label_votes);
    }
    if (root.contains("mapping")) {
        const auto& s = root["mapping"];
        reject_unknown(s, "mapping", {"k1", "k2", "alpha", "rounds", "vote_ratio"});
        read_field(s, "mapping", "k1", config.mapping.k1);
        read_field(s, "mapping", "k2", config.mapping.k2);
        read_field(s, "mapping", "alpha", config.mapping.alpha);
        read_field(s, "mapping", "rounds", config.mapping.rounds);
        read_field(s, "mapping", "vote_ratio", config.mapping.vote_ratio);
    }
    if (root.contains("inference")) {
        const auto& s = root["inference"];
        reject_unknown(s, "inference",
                       {"epsilon_smooth", "clamp", "tau", "w_nb", "w_cbn", "aggregator", "elicit_retries",
                        "temperature"});
        read_field(s, "inference", "epsilon_smooth", config.inference.epsilon_smooth);
        read_field(s, "inference", "clamp", config.inference.clamp);
        read_field(s, "inference", "tau", config.inference.tau);
        read_field(s, "inference", "w_nb", config.inference.w_nb);
        read_field(s, "inference", "w_cbn", config.inference.w_cbn);
        read_field(s, "inference", "elicit_retries", config.inference.elicit_retries);
        read_field(s, "inference", "temperature", config.inference.temperature);
        if (s.contains("aggregator")) {
            std::string name;
            read_field(s, "inference", "aggregator", name);
            if (name == "LOP") {
                config.inference.aggregator = Aggregator::LOP;
            } else if (name == "BMA") {
                config.inference.aggregator = Aggregator::BMA;
            } else {
                throw ConfigError("inference.aggregator must be LOP or BMA");
            }
        }
    }
    if (root.contains("decision")) {
        const auto& s = root["decision"];
        reject_unknown(s, "decision", {"tau_dec"});
        read_field(s, "decision", "tau_dec", config.decision.tau_dec);
    }
    config.validate();
    return config;
}

std::string config_to_json(const PipelineConfig& config) {
    Json root = {
        {"abduction",
         {{"n_target", config.abduction.n_target},
          {"batch", config.abduction.batch},
          {"max_rounds", config.abduction.max_rounds},
          {"label_votes", config.abduction.label_votes}}},
        {"mapping",
         {{"k1", config.mapping.k1},
          {"k2", config.mapping.k2},
          {"alpha", config.mapping.alpha},
          {"rounds", config.mapping.rounds},
          {"vote_ratio", config.mapping.vote_ratio}}},
        {"inference",
         {{"epsilon_smooth", config.inference.epsilon_smooth},
          {"clamp", config.inference.clamp},
          {"tau", config.inference.tau},
          {"w_nb", config.inference.w_nb},
          {"w_cbn", config.inference.w_cbn},
          {"aggregator", to_string(config.inference.aggregator)},
          {"elicit_retries", config.inference.elicit_retries},
          {"temperature", config.inference.temperature}}},
        {"decision", {{"tau_dec", config.decision.tau_dec}}},
    };
    return root.dump(2);
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

}  // namespace anchor
