#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anchor/abduction/abduction.hpp"
#include "anchor/domain/config.hpp"
#include "anchor/domain/persistence.hpp"
#include "anchor/gateway/gateway.hpp"
#include "anchor/harness/datasets.hpp"
#include "anchor/harness/metrics.hpp"
#include "anchor/inference/inference.hpp"
#include "anchor/mapping/mapping.hpp"

namespace anchor::harness {

struct PipelineOptions {
    std::optional<std::filesystem::path> cache_dir;
    std::size_t workers = 4;
    bool clustering_enabled = true;
    double eps_same = kDefaultEpsSame;
    DecisionMode decision_mode = DecisionMode::Argmax;
};

// A factor space together with the labeled pool it was built from.
struct BuiltSpace {
    abduction::AbductionState pool;
    SpaceDocument document;
    bool from_cache = false;
};

std::string abduction_state_to_json(const abduction::AbductionState& state);
abduction::AbductionState abduction_state_from_json(const std::string& json);

// Cache files live at <cache_dir>/<scenario key>-<config digest>.{pool,space}.json.
std::filesystem::path space_cache_path(const std::filesystem::path& cache_dir, const Scenario& scenario,
                                       const std::string& digest);

// Reads the cached space when present, otherwise runs abduction and
// structuring and writes the cache.
BuiltSpace load_or_build_space(gateway::Gateway& gw, const Scenario& scenario, const PipelineConfig& config,
                               const PipelineOptions& options);

// Builds a space from the first `n` factors of a labeled pool.
FactorSpace space_from_prefix(gateway::Gateway& gw, const abduction::AbductionState& pool, std::size_t n,
                              const Scenario& scenario, const PipelineConfig& config, bool clustering_enabled);

struct ScenarioOutcome {
    std::string scenario_id;
    bool ok = false;
    std::string error;
    bool space_from_cache = false;
    std::vector<mapping::MappingResult> mappings;       // one per condition, dataset order
    std::vector<inference::PosteriorReport> reports;    // aligned with mappings
};

struct RunResult {
    MetricsReport metrics;
    std::vector<ScenarioOutcome> scenarios;
    std::vector<std::string> failures;  // "<scenario id>: <error>"
    double wall_seconds = 0.0;
};

// Maps and infers every condition of one scenario over a built space.
ScenarioOutcome run_scenario(gateway::Gateway& gw, const ScenarioBundle& bundle, const FactorSpace& space,
                             const PipelineConfig& config, std::size_t workers);

// Per scenario: load or build the space, map, infer. Failing scenarios are
// recorded and their instances excluded from the metrics.
RunResult run_pairwise(gateway::Gateway& gw, const std::vector<PairwiseInstance>& dataset,
                       const PipelineConfig& config, const PipelineOptions& options);
RunResult run_decision(gateway::Gateway& gw, const std::vector<DecisionInstance>& dataset,
                       const PipelineConfig& config, const PipelineOptions& options);

// metrics.json, reports.jsonl, mappings.jsonl, cost_ledger.json, run.json.
void write_run_artifacts(const std::filesystem::path& run_dir, const RunResult& result,
                         const gateway::CostSnapshot& cost);

struct CurvePoint {
    std::size_t n_factors = 0;
    double unknown_rate = 1.0;
    double micro_f1 = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// For each n in ascending `factor_counts`, truncates every scenario's pool to
// its first n factors, rebuilds, remaps, and re-evaluates.
std::vector<CurvePoint> unknown_rate_curve(gateway::Gateway& gw, const std::vector<PairwiseInstance>& dataset,
                                           const PipelineConfig& config, const PipelineOptions& options,
                                           const std::vector<std::size_t>& factor_counts);

std::string curve_to_tsv(const std::vector<CurvePoint>& curve);

struct CostReport {
    gateway::CostSnapshot cost;
    double wall_seconds = 0.0;
    std::optional<double> token_ratio;  // relative to a baseline run
    std::optional<double> time_ratio;
};

CostReport read_cost_report(const std::filesystem::path& run_dir,
                            const std::optional<std::filesystem::path>& baseline = std::nullopt);
std::string cost_report_table(const CostReport& report);

}  // namespace anchor::harness
