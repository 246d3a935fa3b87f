#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "anchor/domain/config.hpp"
#include "anchor/domain/errors.hpp"
#include "anchor/domain/persistence.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/gateway/gateway.hpp"
#include "anchor/gateway/providers.hpp"
#include "anchor/harness/datasets.hpp"
#include "anchor/harness/metrics.hpp"
#include "anchor/harness/pipeline.hpp"
#include "anchor/inference/inference.hpp"
#include "anchor/mapping/mapping.hpp"
#include "anchor/support/parallel.hpp"

namespace {

using namespace anchor;

struct Common {
    std::string config_path;
    std::string prompts_dir;
    std::size_t workers = 4;
};

struct Session {
    PipelineConfig config;
    gateway::Providers providers;
    std::unique_ptr<gateway::Gateway> gw;
};

Session open_session(const Common& common) {
    Session s;
    if (!common.config_path.empty()) s.config = load_config(common.config_path);
    s.config.validate();
    s.providers = gateway::providers_from_environment();
    auto prompts = gateway::PromptLibrary::defaults();
    if (!common.prompts_dir.empty()) prompts.load_overrides(common.prompts_dir);
    gateway::GatewayOptions options;
    options.retries = s.config.inference.elicit_retries;
    options.temperature = s.config.inference.temperature;
    options.max_in_flight = common.workers;
    s.gw = std::make_unique<gateway::Gateway>(*s.providers.chat, *s.providers.embedder, std::move(prompts), options);
    return s;
}

void emit(const std::string& out_path, const std::string& body) {
    if (out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    out << body;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!text::canonicalize(line).empty()) lines.push_back(line);
    }
    return lines;
}

// Conditions file: one JSON object per line with "text" and optional "id",
// or one plain-text condition per line.
std::vector<Condition> read_conditions(const std::string& path, const Scenario& scenario) {
    std::vector<Condition> out;
    for (const auto& line : read_lines(path)) {
        Condition c;
        c.scenario_id = scenario.id;
        const auto trimmed = text::canonicalize(line);
        if (trimmed.front() == '{') {
            const auto value = nlohmann::json::parse(trimmed);
            c.text = text::canonicalize(value.at("text").get<std::string>());
            c.id = value.value("id", harness::condition_id(scenario.id, c.text));
        } else {
            c.text = trimmed;
            c.id = harness::condition_id(scenario.id, c.text);
        }
        out.push_back(std::move(c));
    }
    return out;
}

void add_common(CLI::App* app, Common& common) {
    app->add_option("--config", common.config_path, "Pipeline configuration file (JSON)");
    app->add_option("--prompts", common.prompts_dir, "Directory of prompt overrides (<Tag>.json)");
    app->add_option("--workers", common.workers, "Concurrent scenarios and provider requests")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factor-space construction, condition mapping and Bayesian posterior estimation"};
    app.require_subcommand(1);
    Common common;

    std::string dataset, kind = "pairwise", cache_dir = ".anchor-cache", out_path, run_dir, mode = "argmax";
    std::string space_file, conditions_file, mapping_file, counts, baseline;
    double tau_dec = -1.0, eps_same = harness::kDefaultEpsSame;
    bool no_clustering = false;

    auto* build = app.add_subcommand("build-space", "Build (or load cached) factor spaces for every scenario");
    build->add_option("dataset", dataset, "Dataset file (JSON lines)")->required()->check(CLI::ExistingFile);
    build->add_option("--kind", kind, "pairwise or decision")->check(CLI::IsMember({"pairwise", "decision"}));
    build->add_option("--cache-dir", cache_dir, "Factor-space cache directory");
    build->add_flag("--no-clustering", no_clustering, "Put every factor in one default cluster");
    add_common(build, common);

    auto* map = app.add_subcommand("map", "Map conditions onto a factor space");
    map->add_option("space-file", space_file)->required()->check(CLI::ExistingFile);
    map->add_option("conditions-file", conditions_file)->required()->check(CLI::ExistingFile);
    map->add_option("--out", out_path, "Output file (default: stdout)");
    add_common(map, common);

    auto* infer = app.add_subcommand("infer", "Compute posteriors for mapped conditions");
    infer->add_option("space-file", space_file)->required()->check(CLI::ExistingFile);
    infer->add_option("mapping-file", mapping_file)->required()->check(CLI::ExistingFile);
    infer->add_option("--out", out_path, "Output file (default: stdout)");
    add_common(infer, common);

    auto* eval = app.add_subcommand("eval", "Run the full pipeline and score a dataset");
    eval->add_option("kind", kind)->required()->check(CLI::IsMember({"pairwise", "decision"}));
    eval->add_option("dataset", dataset)->required()->check(CLI::ExistingFile);
    eval->add_option("--tau-dec", tau_dec, "Support threshold for threshold-mode decisions");
    eval->add_option("--mode", mode, "argmax or threshold")->check(CLI::IsMember({"argmax", "threshold"}));
    eval->add_option("--eps-same", eps_same, "Posterior gap below which a pair counts as Same");
    eval->add_option("--cache-dir", cache_dir, "Factor-space cache directory");
    eval->add_option("--run-dir", run_dir, "Directory for metrics, reports and the cost ledger");
    eval->add_flag("--no-clustering", no_clustering, "Put every factor in one default cluster");
    add_common(eval, common);

    auto* curve = app.add_subcommand("curve", "Unknown rate and F1 as the factor pool grows");
    curve->add_option("dataset", dataset)->required()->check(CLI::ExistingFile);
    curve->add_option("--counts", counts, "Ascending factor counts, e.g. 10,20,40,80")->required();
    curve->add_option("--cache-dir", cache_dir, "Factor-space cache directory");
    curve->add_option("--out", out_path, "TSV output (default: stdout)");
    curve->add_flag("--no-clustering", no_clustering, "Put every factor in one default cluster");
    add_common(curve, common);

    auto* cost = app.add_subcommand("cost-report", "Summarize the cost ledger of a run");
    cost->add_option("run-dir", run_dir)->required()->check(CLI::ExistingDirectory);
    cost->add_option("--baseline", baseline, "Run directory to normalize against")->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        harness::PipelineOptions options;
        options.cache_dir = cache_dir;
        options.workers = common.workers;
        options.clustering_enabled = !no_clustering;
        options.eps_same = eps_same;
        options.decision_mode = mode == "threshold" ? harness::DecisionMode::Threshold : harness::DecisionMode::Argmax;

        if (*build) {
            Session s = open_session(common);
            std::vector<harness::ScenarioBundle> bundles;
            if (kind == "pairwise") {
                auto data = harness::load_pairwise(dataset);
                for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
                bundles = harness::group_by_scenario(data.instances);
            } else {
                auto data = harness::load_decision(dataset);
                for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
                bundles = harness::group_by_scenario(data.instances);
            }
            const std::string digest = s.config.space_digest(s.gw->embedding_model()) + (no_clustering ? "-flat" : "");
            for (const auto& b : bundles) {
                const auto built = harness::load_or_build_space(*s.gw, b.scenario, s.config, options);
                const auto& space = built.document.space;
                std::cout << b.scenario.id << '\t' << space.factors.size() << " factors\t" << space.clusters.size()
                          << " clusters\t" << space.unclustered.size() << " unclustered\t"
                          << (built.from_cache ? "cached" : "built") << '\t'
                          << harness::space_cache_path(cache_dir, b.scenario, digest).string() << '\n';
            }
            std::cerr << gateway::cost_snapshot_to_json(s.gw->ledger().snapshot()) << '\n';
        } else if (*map) {
            Session s = open_session(common);
            const auto doc = read_space_document(space_file);
            const auto conditions = read_conditions(conditions_file, doc.scenario);
            std::vector<mapping::MappingResult> results(conditions.size());
            std::optional<mapping::FactorIndex> index;
            if (!doc.space.empty()) index.emplace(*s.gw, doc.space);
            support::parallel_for(conditions.size(), common.workers, [&](std::size_t i) {
                if (index) {
                    results[i] = mapping::map_condition(*s.gw, doc.space, *index, doc.scenario, conditions[i],
                                                        s.config.mapping);
                } else {
                    results[i].condition_id = conditions[i].id;
                }
            });
            std::string body;
            for (const auto& r : results) body += mapping::mapping_result_to_json(r) + '\n';
            emit(out_path, body);
        } else if (*infer) {
            Session s = open_session(common);
            const auto doc = read_space_document(space_file);
            std::vector<mapping::MappingResult> mappings;
            for (const auto& line : read_lines(mapping_file)) mappings.push_back(mapping::mapping_result_from_json(line));
            std::vector<inference::PosteriorReport> reports(mappings.size());
            support::parallel_for(mappings.size(), common.workers, [&](std::size_t i) {
                reports[i] = inference::infer(*s.gw, doc.scenario, doc.space, mappings[i], s.config.inference);
            });
            std::string body;
            for (const auto& r : reports) body += inference::posterior_report_to_json(r) + '\n';
            emit(out_path, body);
        } else if (*eval) {
            Session s = open_session(common);
            if (tau_dec >= 0.0) s.config.decision.tau_dec = tau_dec;
            s.config.validate();
            harness::RunResult result;
            if (kind == "pairwise") {
                auto data = harness::load_pairwise(dataset);
                for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
                result = harness::run_pairwise(*s.gw, data.instances, s.config, options);
            } else {
                auto data = harness::load_decision(dataset);
                for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
                result = harness::run_decision(*s.gw, data.instances, s.config, options);
            }
            for (const auto& f : result.failures) std::cerr << "failed: " << f << '\n';
            if (!run_dir.empty()) harness::write_run_artifacts(run_dir, result, s.gw->ledger().snapshot());
            std::cout << harness::metrics_table(result.metrics);
        } else if (*curve) {
            Session s = open_session(common);
            std::vector<std::size_t> ns;
            for (const auto& part : text::split(counts, ',')) ns.push_back(static_cast<std::size_t>(std::stoul(part)));
            auto data = harness::load_pairwise(dataset);
            for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
            emit(out_path, harness::curve_to_tsv(harness::unknown_rate_curve(*s.gw, data.instances, s.config, options, ns)));
        } else if (*cost) {
            std::optional<std::filesystem::path> base;
            if (!baseline.empty()) base = baseline;
            std::cout << harness::cost_report_table(harness::read_cost_report(run_dir, base));
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
