#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include "anchor/domain/errors.hpp"
#include "anchor/gateway/providers.hpp"
#include "anchor/harness/datasets.hpp"
#include "anchor/harness/metrics.hpp"
#include "anchor/harness/pipeline.hpp"
#include "doctest.h"
#include "generators.hpp"
#include "golden.hpp"
#include "scripted_llm.hpp"

using namespace anchor;
using namespace anchor::harness;
using testing::Rng;
namespace fs = std::filesystem;

namespace {

const fs::path kGoldenDir = ANCHOR_GOLDEN_DIR;

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("anchor-harness-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string serialize(const RunResult& run) {
    std::string out;
    for (const auto& s : run.scenarios) {
        out += s.scenario_id + (s.ok ? " ok\n" : " failed\n");
        for (const auto& m : s.mappings) out += mapping::mapping_result_to_json(m) + '\n';
        for (const auto& r : s.reports) out += inference::posterior_report_to_json(r) + '\n';
    }
    return out + metrics_to_json(run.metrics);
}

PipelineOptions serial() {
    PipelineOptions o;
    o.workers = 1;
    return o;
}

inference::PosteriorReport report_with(std::optional<double> p, bool abstained = false) {
    inference::PosteriorReport r;
    r.p_final = p;
    r.abstained = abstained || !p;
    return r;
}

struct Golden {
    testing::ScriptedLlm llm;
    gateway::ScriptedChatProvider chat{std::ref(llm)};
    gateway::HashEmbedder embedder{64};
    gateway::Gateway gw{chat, embedder};
};

}  // namespace

TEST_CASE("golden dataset loads") {
    const auto data = load_pairwise(kGoldenDir / "dataset.jsonl");
    CHECK(data.warnings.empty());
    REQUIRE(data.instances.size() == 6);
    const auto expected = testing::golden_dataset();
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(data.instances[i].scenario == expected[i].scenario);
        CHECK(data.instances[i].condition1 == expected[i].condition1);
        CHECK(data.instances[i].condition2 == expected[i].condition2);
        CHECK(data.instances[i].gold == expected[i].gold);
    }
    const auto bundles = group_by_scenario(data.instances);
    REQUIRE(bundles.size() == 3);
    CHECK(bundles[0].scenario.id == "noodles");
    std::size_t conditions = 0;
    for (const auto& b : bundles) conditions += b.conditions.size();
    CHECK(conditions == 12);
    CHECK(data.instances[0].condition1.id == condition_id("noodles", testing::kPathogenCondition));
    CHECK(condition_id("s", "  a   b ") == condition_id("s", "a b"));
    CHECK(condition_id("s", "a b") != condition_id("t", "a b"));
}

TEST_CASE("dataset schema errors name the line") {
    const auto dir = scratch("datasets");
    const std::string good =
        R"({"scenario_id":"s","scenario":"d","outcome1":"a","outcome2":"b","condition1":"x","condition2":"y","gold":"Same"})";
    {
        std::ofstream(dir / "missing.jsonl") << good << "\n"
                                             << R"({"scenario_id":"s","scenario":"d","outcome1":"a","outcome2":"b","condition1":"x","condition2":"y"})"
                                             << "\n";
    }
    try {
        load_pairwise(dir / "missing.jsonl");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
    }
    std::ofstream(dir / "gold.jsonl") << R"({"scenario_id":"s","scenario":"d","outcome1":"a","outcome2":"b","condition1":"x","condition2":"y","gold":"Maybe"})";
    CHECK_THROWS_AS(load_pairwise(dir / "gold.jsonl"), SchemaError);
    std::ofstream(dir / "json.jsonl") << "[1, 2]\n";
    CHECK_THROWS_AS(load_pairwise(dir / "json.jsonl"), SchemaError);
    std::ofstream(dir / "redefined.jsonl") << good << "\n"
                                           << R"({"scenario_id":"s","scenario":"other","outcome1":"a","outcome2":"b","condition1":"x","condition2":"y","gold":"Same"})";
    CHECK_THROWS_AS(load_pairwise(dir / "redefined.jsonl"), SchemaError);
    std::ofstream(dir / "blank.jsonl") << "\n" << good << "\n\n";
    CHECK(load_pairwise(dir / "blank.jsonl").instances.size() == 1);
    std::ofstream(dir / "empty.jsonl") << "";
    const auto empty = load_pairwise(dir / "empty.jsonl");
    CHECK(empty.instances.empty());
    CHECK(empty.warnings.size() == 1);
    CHECK_THROWS_AS(load_pairwise(dir / "absent.jsonl"), IoError);

    std::ofstream(dir / "decision.jsonl") << R"({"scenario_id":"c","scenario":"","outcome1":"true","outcome2":"false","condition":"claim","gold":"O2"})"
                                          << "\n";
    const auto decision = load_decision(dir / "decision.jsonl");
    REQUIRE(decision.instances.size() == 1);
    CHECK(decision.instances[0].gold == DecisionGold::O2);
    CHECK(decision.instances[0].scenario.description.empty());
    fs::remove_all(dir);
}

TEST_CASE("pairwise classification") {
    CHECK(classify_pairwise(report_with(0.7), report_with(0.4)) == PairPrediction::Context1);
    CHECK(classify_pairwise(report_with(0.4), report_with(0.7)) == PairPrediction::Context2);
    CHECK(classify_pairwise(report_with(0.6), report_with(0.6)) == PairPrediction::Same);
    CHECK(classify_pairwise(report_with(0.6), report_with(0.6 + 1e-12)) == PairPrediction::Same);
    CHECK(classify_pairwise(report_with(0.6), report_with(0.65), 0.1) == PairPrediction::Same);
    CHECK(classify_pairwise(report_with(0.9, true), report_with(0.1)) == PairPrediction::Unknown);
    CHECK(classify_pairwise(report_with(std::nullopt), report_with(0.1)) == PairPrediction::Unknown);
}

TEST_CASE("pairwise metrics on a hand-scored example") {
    using G = PairGold;
    using P = PairPrediction;
    const std::vector<G> golds = {G::Context1, G::Context1, G::Context2, G::Same, G::Same, G::Context2};
    const std::vector<P> preds = {P::Context1, P::Context2, P::Context2, P::Same, P::Unknown, P::Same};
    const auto m = evaluate_pairwise(preds, golds);
    CHECK(m.instances == 6);
    CHECK(m.per_class.at("Context1") == ClassScore{1, 0, 1, 1.0, 0.5, 2.0 / 3.0});
    CHECK(m.per_class.at("Context2") == ClassScore{1, 1, 1, 0.5, 0.5, 0.5});
    CHECK(m.per_class.at("Same") == ClassScore{1, 1, 1, 0.5, 0.5, 0.5});
    CHECK(m.micro_f1 == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
    CHECK(m.accuracy == 0.5);
    CHECK(m.coverage == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(m.unknown_rate == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(m.balanced_accuracy == 0.5);
    CHECK(metrics_from_json(metrics_to_json(m)) == m);
    CHECK_THROWS_AS(evaluate_pairwise(preds, {G::Same}), LengthMismatch);
    CHECK(evaluate_pairwise({}, {}).micro_f1 == 0.0);
}

TEST_CASE("pairwise metric properties") {
    Rng rng(91);
    const std::vector<PairGold> gold_values = {PairGold::Context1, PairGold::Context2, PairGold::Same};
    const std::vector<PairPrediction> pred_values = {PairPrediction::Context1, PairPrediction::Context2,
                                                     PairPrediction::Same, PairPrediction::Unknown};
    for (int draw = 0; draw < 300; ++draw) {
        const int n = testing::uniform_int(rng, 1, 40);
        const bool allow_unknown = draw % 2;
        std::vector<PairGold> golds;
        std::vector<PairPrediction> preds;
        for (int i = 0; i < n; ++i) {
            golds.push_back(gold_values[rng() % 3]);
            preds.push_back(pred_values[rng() % (allow_unknown ? 4 : 3)]);
        }
        const auto m = evaluate_pairwise(preds, golds);
        CHECK(m.coverage + m.unknown_rate == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m.micro_f1 >= m.accuracy - 1e-15);
        if (!allow_unknown) CHECK(m.micro_f1 == doctest::Approx(m.accuracy).epsilon(1e-12));

        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<PairGold> g2;
        std::vector<PairPrediction> p2;
        for (std::size_t i : order) {
            g2.push_back(golds[i]);
            p2.push_back(preds[i]);
        }
        CHECK(evaluate_pairwise(p2, g2) == m);
    }
}

TEST_CASE("decision metrics") {
    const std::vector<inference::PosteriorReport> reports = {report_with(0.9), report_with(0.91), report_with(0.2),
                                                             report_with(std::nullopt)};
    const std::vector<DecisionGold> golds = {DecisionGold::O1, DecisionGold::O1, DecisionGold::O2, DecisionGold::O2};
    const auto threshold = evaluate_decision(reports, golds, 0.9, DecisionMode::Threshold);
    // 0.9 is not above the threshold, 0.91 is; the abstention counts as O2.
    CHECK(threshold.per_class.at("O1").tp == 1);
    CHECK(threshold.per_class.at("O1").fn == 1);
    CHECK(threshold.per_class.at("O2").tp == 2);
    CHECK(threshold.per_class.at("O2").fp == 1);
    CHECK(threshold.accuracy == 0.75);
    CHECK(threshold.coverage == 0.75);

    const auto argmax = evaluate_decision(reports, golds, 0.9, DecisionMode::Argmax);
    CHECK(argmax.accuracy == 0.75);
    CHECK(argmax.per_class.at("O2").fn == 1);
    CHECK(argmax.per_class.at("O2").fp == 0);

    const auto constant = evaluate_decision({report_with(0.95), report_with(0.95)}, {DecisionGold::O1, DecisionGold::O2},
                                            0.9, DecisionMode::Threshold);
    CHECK(constant.balanced_accuracy == 0.5);
    CHECK_THROWS_AS(evaluate_decision(reports, {}, 0.9, DecisionMode::Argmax), LengthMismatch);
}

TEST_CASE("warm and cold caches give identical runs") {
    const auto cache = scratch("cache");
    auto options = serial();
    options.cache_dir = cache;
    Golden cold, warm;
    const auto first = run_pairwise(cold.gw, testing::golden_dataset(), testing::golden_config(), options);
    const auto second = run_pairwise(warm.gw, testing::golden_dataset(), testing::golden_config(), options);
    CHECK(first.failures.empty());
    CHECK(serialize(first) == serialize(second));
    for (const auto& s : first.scenarios) CHECK_FALSE(s.space_from_cache);
    for (const auto& s : second.scenarios) CHECK(s.space_from_cache);
    CHECK(warm.gw.ledger().snapshot().calls_for(gateway::PromptTag::SentenceGen) == 0);
    CHECK(warm.gw.ledger().snapshot().calls_for(gateway::PromptTag::LabelVote) == 0);
    CHECK(cold.gw.ledger().snapshot().calls_for(gateway::PromptTag::SentenceGen) > 0);

    const auto digest = testing::golden_config().space_digest("mock:hash-64");
    CHECK(fs::exists(space_cache_path(cache, testing::golden_dataset()[0].scenario, digest)));

    auto flat = options;
    flat.clustering_enabled = false;
    Golden other;
    const auto unclustered = run_pairwise(other.gw, testing::golden_dataset(), testing::golden_config(), flat);
    for (const auto& s : unclustered.scenarios) CHECK_FALSE(s.space_from_cache);
    fs::remove_all(cache);
}

TEST_CASE("the pathogen condition maps to food safety") {
    Golden g;
    const auto run = run_pairwise(g.gw, testing::golden_dataset(), testing::golden_config(), serial());
    const auto target = condition_id("noodles", testing::kPathogenCondition);
    const auto food_safety = make_factor(testing::kFoodSafetyFactor).id;
    bool found = false;
    for (const auto& s : run.scenarios) {
        for (const auto& m : s.mappings) {
            if (m.condition_id != target) continue;
            found = true;
            CHECK(std::find(m.final_set.begin(), m.final_set.end(), food_safety) != m.final_set.end());
        }
    }
    CHECK(found);
}

TEST_CASE("a failing scenario does not stop the others") {
    testing::ScriptedLlm llm;
    const auto& treadmill = testing::golden_scenarios()[1].scenario;
    REQUIRE(treadmill.id == "treadmill");
    gateway::ScriptedChatProvider chat([&](const gateway::ChatRequest& r) {
        if (r.turns.back().text.find(treadmill.outcome1) != std::string::npos) throw FixtureMissing("no fixture");
        return llm(r);
    });
    gateway::HashEmbedder embedder(64);
    gateway::Gateway gw(chat, embedder);
    const auto run = run_pairwise(gw, testing::golden_dataset(), testing::golden_config(), serial());
    REQUIRE(run.failures.size() == 1);
    CHECK(run.failures[0].rfind("treadmill: ", 0) == 0);
    CHECK(run.metrics.instances == 4);
    for (const auto& s : run.scenarios) CHECK(s.ok == (s.scenario_id != "treadmill"));

    gateway::ScriptedChatProvider denied([](const gateway::ChatRequest&) -> std::string { throw ConfigError("key"); });
    gateway::Gateway gw2(denied, embedder);
    CHECK_THROWS_AS(run_pairwise(gw2, testing::golden_dataset(), testing::golden_config(), serial()), ConfigError);
}

TEST_CASE("recorded fixtures replay the scripted run") {
    auto replay = gateway::FixtureChatProvider::from_file(kGoldenDir / "chat_fixtures.jsonl");
    gateway::HashEmbedder embedder(64);
    gateway::Gateway replayed(replay, embedder);
    const auto dataset = load_pairwise(kGoldenDir / "dataset.jsonl").instances;
    const auto from_fixtures = run_pairwise(replayed, dataset, testing::golden_config(), serial());
    Golden scripted;
    const auto from_script = run_pairwise(scripted.gw, testing::golden_dataset(), testing::golden_config(), serial());
    CHECK(from_fixtures.failures.empty());
    CHECK(serialize(from_fixtures) == serialize(from_script));
}

TEST_CASE("committed fixtures are up to date") {
    testing::ScriptedLlm llm;
    gateway::ScriptedChatProvider scripted(std::ref(llm));
    gateway::RecordingChatProvider recorder(scripted);
    gateway::HashEmbedder embedder(64);
    gateway::Gateway gw(recorder, embedder);
    const auto dataset = testing::golden_dataset();
    run_pairwise(gw, dataset, testing::golden_config(), serial());
    unknown_rate_curve(gw, dataset, testing::golden_config(), serial(), {0, 5, 10, 20, 40});
    const auto dir = scratch("fixtures");
    recorder.write_jsonl(dir / "chat_fixtures.jsonl");
    CHECK_MESSAGE(slurp(dir / "chat_fixtures.jsonl") == slurp(kGoldenDir / "chat_fixtures.jsonl"),
                  "regenerate with make_golden_fixtures tests/fixtures/golden");
    fs::remove_all(dir);
}

TEST_CASE("unknown-rate curve") {
    Golden g;
    const auto dataset = testing::golden_dataset();
    const auto config = testing::golden_config();
    const auto curve = unknown_rate_curve(g.gw, dataset, config, serial(), {0, 5, 10, 20, 40, 1000});
    REQUIRE(curve.size() == 6);
    CHECK(curve[0].unknown_rate == 1.0);
    CHECK(curve[0].micro_f1 == 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].unknown_rate <= curve[i - 1].unknown_rate);
    Golden fresh;
    const auto full = run_pairwise(fresh.gw, dataset, config, serial());
    CHECK(curve.back().unknown_rate == full.metrics.unknown_rate);
    CHECK(curve.back().micro_f1 == full.metrics.micro_f1);
    CHECK_THROWS_AS(unknown_rate_curve(g.gw, dataset, config, serial(), {10, 5}), PreconditionError);
    CHECK(curve_to_tsv({{5, 0.5, 0.25}}) == "n_factors\tunknown_rate\tmicro_f1\n5\t0.500000\t0.250000\n");
}

TEST_CASE("decision runs and run artifacts") {
    std::vector<DecisionInstance> decisions;
    for (const auto& inst : testing::golden_dataset()) {
        decisions.push_back({inst.scenario, inst.condition1, DecisionGold::O1});
        decisions.push_back({inst.scenario, inst.condition2, DecisionGold::O2});
    }
    Golden g;
    auto options = serial();
    options.decision_mode = DecisionMode::Threshold;
    const auto run = run_decision(g.gw, decisions, testing::golden_config(), options);
    CHECK(run.failures.empty());
    CHECK(run.metrics.instances == 12);

    const auto dir = scratch("artifacts");
    write_run_artifacts(dir, run, g.gw.ledger().snapshot());
    for (const char* name : {"metrics.json", "reports.jsonl", "mappings.jsonl", "cost_ledger.json", "run.json"}) {
        CHECK(fs::exists(dir / name));
    }
    CHECK(metrics_from_json(slurp(dir / "metrics.json")) == run.metrics);
    const auto cost = read_cost_report(dir, dir);
    CHECK(cost.cost == g.gw.ledger().snapshot());
    REQUIRE(cost.token_ratio.has_value());
    CHECK(*cost.token_ratio == 1.0);
    CHECK_FALSE(cost_report_table(cost).empty());
    fs::remove_all(dir);
}
