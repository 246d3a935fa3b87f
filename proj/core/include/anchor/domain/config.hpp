#pragma once

#include <string>
#include <string_view>

namespace anchor {

enum class Aggregator { LOP, BMA };

struct AbductionConfig {
    int n_target = 80;
    int batch = 10;
    int max_rounds = 20;
    int label_votes = 3;

    friend bool operator==(const AbductionConfig&, const AbductionConfig&) = default;
};

struct MappingConfig {
    int k1 = 3;
    int k2 = 5;
    double alpha = 0.5;
    int rounds = 3;
    double vote_ratio = 0.5;

    friend bool operator==(const MappingConfig&, const MappingConfig&) = default;
};

struct InferenceConfig {
    double epsilon_smooth = 0.5;  // Laplace count for latent CPTs
    double clamp = 0.01;          // probability clamp for every elicited value
    double tau = 0.0;             // abstention threshold on max(p, 1 - p)
    double w_nb = 0.5;
    double w_cbn = 0.5;
    Aggregator aggregator = Aggregator::LOP;
    int elicit_retries = 20;
    double temperature = 0.5;

    friend bool operator==(const InferenceConfig&, const InferenceConfig&) = default;
};

struct DecisionConfig {
    double tau_dec = 0.9;

    friend bool operator==(const DecisionConfig&, const DecisionConfig&) = default;
};

struct PipelineConfig {
    AbductionConfig abduction;
    MappingConfig mapping;
    InferenceConfig inference;
    DecisionConfig decision;

    // Table of defaults for long-document datasets (40 / 5 / 10).
    static PipelineConfig long_context();

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

    // Throws ConfigError naming the first offending field.
    void validate() const;

    // Digest over the fields that shape a FactorSpace; the cache key.
    std::string space_digest(std::string_view embedding_model) const;
};

std::string_view to_string(Aggregator aggregator) noexcept;

// Structured key-value document whose keys mirror the field names above.
PipelineConfig config_from_json(std::string_view document);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);

}  // namespace anchor
