#include "anchor/harness/pipeline.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/structuring/structuring.hpp"
#include "anchor/support/parallel.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::harness {
namespace {

std::mutex& writer_mutex() {
    static std::mutex m;
    return m;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::lock_guard lock(writer_mutex());
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string file_key(const Scenario& scenario) {
    std::string safe;
    for (char c : scenario.id) {
        const auto u = static_cast<unsigned char>(c);
        safe.push_back(std::isalnum(u) || c == '-' || c == '_' ? c : '_');
        if (safe.size() >= 40) break;
    }
    return safe + "-" + text::sha256_hex(scenario.id).substr(0, 8);
}

std::filesystem::path pool_path(const std::filesystem::path& space_path) {
    auto p = space_path;
    auto name = p.filename().string();
    name.replace(name.size() - std::string(".space.json").size(), std::string::npos, ".pool.json");
    return p.replace_filename(name);
}

// Runs every scenario bundle with failure isolation.
std::vector<ScenarioOutcome> run_bundles(gateway::Gateway& gw, const std::vector<ScenarioBundle>& bundles,
                                         const PipelineConfig& config, const PipelineOptions& options) {
    std::vector<ScenarioOutcome> outcomes(bundles.size());
    support::parallel_for(bundles.size(), options.workers, [&](std::size_t i) {
        ScenarioOutcome& out = outcomes[i];
        out.scenario_id = bundles[i].scenario.id;
        try {
            const BuiltSpace built = load_or_build_space(gw, bundles[i].scenario, config, options);
            out = run_scenario(gw, bundles[i], built.document.space, config, options.workers);
            out.space_from_cache = built.from_cache;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    });
    return outcomes;
}

std::map<std::string, std::pair<const mapping::MappingResult*, const inference::PosteriorReport*>> index_reports(
    const std::vector<ScenarioOutcome>& outcomes) {
    std::map<std::string, std::pair<const mapping::MappingResult*, const inference::PosteriorReport*>> out;
    for (const auto& o : outcomes) {
        if (!o.ok) continue;
        for (std::size_t i = 0; i < o.mappings.size(); ++i) out[o.mappings[i].condition_id] = {&o.mappings[i], &o.reports[i]};
    }
    return out;
}

std::vector<std::string> failures_of(const std::vector<ScenarioOutcome>& outcomes) {
    std::vector<std::string> out;
    for (const auto& o : outcomes) {
        if (!o.ok) out.push_back(o.scenario_id + ": " + o.error);
    }
    return out;
}

MetricsReport score_pairwise(const std::vector<PairwiseInstance>& dataset, const std::vector<ScenarioOutcome>& outcomes,
                             double eps_same) {
    const auto index = index_reports(outcomes);
    std::vector<PairPrediction> predictions;
    std::vector<PairGold> golds;
    std::vector<bool> mapped;
    for (const auto& inst : dataset) {
        auto a = index.find(inst.condition1.id);
        auto b = index.find(inst.condition2.id);
        if (a == index.end() || b == index.end()) continue;
        predictions.push_back(classify_pairwise(*a->second.second, *b->second.second, eps_same));
        golds.push_back(inst.gold);
        mapped.push_back(!a->second.first->abstained && !b->second.first->abstained);
    }
    return evaluate_pairwise(predictions, golds, mapped);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string abduction_state_to_json(const abduction::AbductionState& s) {
    Json pool = Json::array();
    for (const auto& f : s.pool) {
        pool.push_back({{"id", f.id},
                        {"text", f.text},
                        {"label", f.label ? Json(std::string(to_string(*f.label))) : Json(nullptr)},
                        {"phi", f.phi ? Json(*f.phi) : Json(nullptr)},
                        {"provenance", std::string(to_string(f.provenance))}});
    }
    Json tallies = Json::object();
    for (const auto& [id, t] : s.tallies) {
        tallies[id] = {{"o1", t.o1}, {"o2", t.o2}, {"neutral", t.neutral}, {"failed", t.failed}};
    }
    const Json j = {{"format", "anchor.factor_pool"},
                    {"version", kFactorSpaceFormatVersion},
                    {"round", s.round},
                    {"stopped_reason", std::string(abduction::to_string(s.stopped_reason))},
                    {"pool_sizes", s.pool_sizes},
                    {"pool", pool},
                    {"tallies", tallies}};
    return j.dump(2);
}

abduction::AbductionState abduction_state_from_json(const std::string& json) {
    try {
        const Json j = Json::parse(json);
        if (j.at("format") != "anchor.factor_pool") throw ParseError("not a factor pool document");
        abduction::AbductionState s;
        s.round = j.at("round").get<int>();
        s.stopped_reason = j.at("stopped_reason").get<std::string>() == "MaxRounds"
                               ? abduction::StopReason::MaxRounds
                               : abduction::StopReason::TargetReached;
        s.pool_sizes = j.at("pool_sizes").get<std::vector<std::size_t>>();
        for (const auto& f : j.at("pool")) {
            Factor factor;
            factor.id = f.at("id").get<std::string>();
            factor.text = f.at("text").get<std::string>();
            if (!f.at("label").is_null()) factor.label = factor_label_from_string(f.at("label").get<std::string>());
            if (!f.at("phi").is_null()) factor.phi = f.at("phi").get<double>();
            factor.provenance =
                provenance_from_string(f.at("provenance").get<std::string>()).value_or(Provenance::LabelInitialized);
            s.pool.push_back(std::move(factor));
        }
        for (const auto& [id, t] : j.at("tallies").items()) {
            s.tallies[id] = {t.at("o1").get<int>(), t.at("o2").get<int>(), t.at("neutral").get<int>(),
                             t.at("failed").get<int>()};
        }
        return s;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed factor pool document: ") + e.what());
    }
}

std::filesystem::path space_cache_path(const std::filesystem::path& cache_dir, const Scenario& scenario,
                                       const std::string& digest) {
    return cache_dir / (file_key(scenario) + "-" + digest + ".space.json");
}

BuiltSpace load_or_build_space(gateway::Gateway& gw, const Scenario& scenario, const PipelineConfig& config,
                               const PipelineOptions& options) {
    std::optional<std::filesystem::path> space_file;
    if (options.cache_dir) {
        std::string digest = config.space_digest(gw.embedding_model());
        if (!options.clustering_enabled) digest += "-flat";
        space_file = space_cache_path(*options.cache_dir, scenario, digest);
        if (std::filesystem::exists(*space_file) && std::filesystem::exists(pool_path(*space_file))) {
            BuiltSpace cached;
            cached.document = read_space_document(*space_file);
            cached.pool = abduction_state_from_json(read_text(pool_path(*space_file)));
            cached.from_cache = true;
            if (cached.document.scenario == scenario) return cached;
        }
    }

    BuiltSpace built;
    built.pool = abduction::build_factor_pool(gw, scenario, config);
    built.document.scenario = scenario;
    built.document.space = structuring::build_hierarchy(gw, built.pool, scenario, config, options.clustering_enabled);
    const auto violations = validate_factor_space(built.document.space);
    if (!violations.empty()) throw BackendError("structuring produced an invalid space: " + violations.front());
    if (space_file) {
        write_text(pool_path(*space_file), abduction_state_to_json(built.pool));
        write_text(*space_file, space_document_to_json(built.document));
    }
    return built;
}

FactorSpace space_from_prefix(gateway::Gateway& gw, const abduction::AbductionState& pool, std::size_t n,
                              const Scenario& scenario, const PipelineConfig& config, bool clustering_enabled) {
    abduction::AbductionState prefix = pool;
    if (prefix.pool.size() > n) prefix.pool.resize(n);
    return structuring::build_hierarchy(gw, prefix, scenario, config, clustering_enabled);
}

ScenarioOutcome run_scenario(gateway::Gateway& gw, const ScenarioBundle& bundle, const FactorSpace& space,
                             const PipelineConfig& config, std::size_t workers) {
    ScenarioOutcome out;
    out.scenario_id = bundle.scenario.id;
    const std::size_t n = bundle.conditions.size();
    out.mappings.resize(n);
    out.reports.resize(n);
    std::optional<mapping::FactorIndex> index;
    if (!space.empty()) index.emplace(gw, space);
    const mapping::FactorIndex* index_ptr = index ? &*index : nullptr;

    support::parallel_for(n, workers, [&](std::size_t i) {
        const Condition& c = bundle.conditions[i];
        if (index_ptr) {
            out.mappings[i] = mapping::map_condition(gw, space, *index_ptr, bundle.scenario, c, config.mapping);
        } else {
            out.mappings[i].condition_id = c.id;
            out.mappings[i].seed = mapping::presentation_seed(c);
        }
        out.reports[i] = inference::infer(gw, bundle.scenario, space, out.mappings[i], config.inference);
    });
    out.ok = true;
    return out;
}

RunResult run_pairwise(gateway::Gateway& gw, const std::vector<PairwiseInstance>& dataset,
                       const PipelineConfig& config, const PipelineOptions& options) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.scenarios = run_bundles(gw, group_by_scenario(dataset), config, options);
    result.failures = failures_of(result.scenarios);
    result.metrics = score_pairwise(dataset, result.scenarios, options.eps_same);
    result.wall_seconds = seconds_since(start);
    return result;
}

RunResult run_decision(gateway::Gateway& gw, const std::vector<DecisionInstance>& dataset,
                       const PipelineConfig& config, const PipelineOptions& options) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.scenarios = run_bundles(gw, group_by_scenario(dataset), config, options);
    result.failures = failures_of(result.scenarios);
    const auto index = index_reports(result.scenarios);
    std::vector<inference::PosteriorReport> reports;
    std::vector<DecisionGold> golds;
    for (const auto& inst : dataset) {
        auto it = index.find(inst.condition.id);
        if (it == index.end()) continue;
        reports.push_back(*it->second.second);
        golds.push_back(inst.gold);
    }
    result.metrics = evaluate_decision(reports, golds, config.decision.tau_dec, options.decision_mode);
    result.wall_seconds = seconds_since(start);
    return result;
}

void write_run_artifacts(const std::filesystem::path& run_dir, const RunResult& result,
                         const gateway::CostSnapshot& cost) {
    std::filesystem::create_directories(run_dir);
    write_text(run_dir / "metrics.json", metrics_to_json(result.metrics) + "\n");
    std::string reports, mappings;
    Json scenarios = Json::array();
    for (const auto& o : result.scenarios) {
        scenarios.push_back({{"scenario_id", o.scenario_id}, {"ok", o.ok}, {"error", o.error},
                             {"space_from_cache", o.space_from_cache}});
        for (const auto& r : o.reports) reports += inference::posterior_report_to_json(r) + "\n";
        for (const auto& m : o.mappings) mappings += mapping::mapping_result_to_json(m) + "\n";
    }
    write_text(run_dir / "reports.jsonl", reports);
    write_text(run_dir / "mappings.jsonl", mappings);
    write_text(run_dir / "cost_ledger.json", gateway::cost_snapshot_to_json(cost) + "\n");
    const Json run = {{"wall_seconds", result.wall_seconds}, {"failures", result.failures}, {"scenarios", scenarios}};
    write_text(run_dir / "run.json", run.dump(2) + "\n");
}

std::vector<CurvePoint> unknown_rate_curve(gateway::Gateway& gw, const std::vector<PairwiseInstance>& dataset,
                                           const PipelineConfig& config, const PipelineOptions& options,
                                           const std::vector<std::size_t>& factor_counts) {
    config.validate();
    for (std::size_t i = 1; i < factor_counts.size(); ++i) {
        if (factor_counts[i] < factor_counts[i - 1]) throw PreconditionError("factor counts must be ascending");
    }
    const auto bundles = group_by_scenario(dataset);
    std::vector<abduction::AbductionState> pools(bundles.size());
    support::parallel_for(bundles.size(), options.workers, [&](std::size_t i) {
        pools[i] = load_or_build_space(gw, bundles[i].scenario, config, options).pool;
    });

    std::vector<CurvePoint> curve;
    for (std::size_t n : factor_counts) {
        std::vector<ScenarioOutcome> outcomes(bundles.size());
        support::parallel_for(bundles.size(), options.workers, [&](std::size_t i) {
            const auto space =
                space_from_prefix(gw, pools[i], n, bundles[i].scenario, config, options.clustering_enabled);
            outcomes[i] = run_scenario(gw, bundles[i], space, config, options.workers);
        });
        const auto metrics = score_pairwise(dataset, outcomes, options.eps_same);
        curve.push_back({n, metrics.unknown_rate, metrics.micro_f1});
    }
    return curve;
}

std::string curve_to_tsv(const std::vector<CurvePoint>& curve) {
    std::string out = "n_factors\tunknown_rate\tmicro_f1\n";
    char line[96];
    for (const auto& p : curve) {
        std::snprintf(line, sizeof line, "%zu\t%.6f\t%.6f\n", p.n_factors, p.unknown_rate, p.micro_f1);
        out += line;
    }
    return out;
}

CostReport read_cost_report(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& baseline) {
    auto load = [](const std::filesystem::path& dir) {
        CostReport r;
        r.cost = gateway::cost_snapshot_from_json(read_text(dir / "cost_ledger.json"));
        if (std::filesystem::exists(dir / "run.json")) {
            const Json run = Json::parse(read_text(dir / "run.json"), nullptr, false);
            if (!run.is_discarded() && run.contains("wall_seconds")) r.wall_seconds = run.at("wall_seconds").get<double>();
        }
        return r;
    };
    CostReport report = load(run_dir);
    if (baseline) {
        const CostReport base = load(*baseline);
        const auto tokens = [](const gateway::CostSnapshot& c) {
            const auto t = c.chat_total();
            return static_cast<double>(t.tokens_in + t.tokens_out + c.embed_tokens);
        };
        if (tokens(base.cost) > 0) report.token_ratio = tokens(report.cost) / tokens(base.cost);
        if (base.wall_seconds > 0) report.time_ratio = report.wall_seconds / base.wall_seconds;
    }
    return report;
}

std::string cost_report_table(const CostReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %8s %12s %12s\n", "tag", "calls", "tokens_in", "tokens_out");
    out << line;
    for (const auto& [tag, c] : report.cost.chat) {
        std::snprintf(line, sizeof line, "%-16s %8lld %12lld %12lld\n", tag.c_str(), static_cast<long long>(c.calls),
                      static_cast<long long>(c.tokens_in), static_cast<long long>(c.tokens_out));
        out << line;
    }
    const auto total = report.cost.chat_total();
    std::snprintf(line, sizeof line, "%-16s %8lld %12lld %12lld\n", "total", static_cast<long long>(total.calls),
                  static_cast<long long>(total.tokens_in), static_cast<long long>(total.tokens_out));
    out << line;
    std::snprintf(line, sizeof line, "embeddings: %lld calls, %lld texts, %lld tokens\n",
                  static_cast<long long>(report.cost.embed_calls), static_cast<long long>(report.cost.embed_texts),
                  static_cast<long long>(report.cost.embed_tokens));
    out << line;
    std::snprintf(line, sizeof line, "wall time: %.3f s\n", report.wall_seconds);
    out << line;
    if (report.token_ratio) {
        std::snprintf(line, sizeof line, "tokens relative to baseline: %.3f\n", *report.token_ratio);
        out << line;
    }
    if (report.time_ratio) {
        std::snprintf(line, sizeof line, "time relative to baseline: %.3f\n", *report.time_ratio);
        out << line;
    }
    return out.str();
}

}  // namespace anchor::harness
