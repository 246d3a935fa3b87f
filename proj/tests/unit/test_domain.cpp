#include <filesystem>
#include <unistd.h>

#include "anchor/domain/config.hpp"
#include "anchor/domain/errors.hpp"
#include "anchor/domain/persistence.hpp"
#include "anchor/domain/text.hpp"
#include "anchor/domain/types.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace anchor;
using anchor::testing::Rng;
namespace fs = std::filesystem;

namespace {

FactorSpace random_space(Rng& rng) {
    FactorSpace space;
    space.scenario_id = "s" + std::to_string(rng() % 100);
    const int n = testing::uniform_int(rng, 0, 20);
    std::vector<FactorId> ids;
    for (int i = 0; i < n; ++i) {
        std::optional<FactorLabel> label;
        if (rng() % 4) label = static_cast<FactorLabel>(rng() % 3);
        auto f = make_factor("factor \"" + std::to_string(i) + "\" ünïcode " + std::to_string(rng() % 1000), label);
        if (rng() & 1) {
            f.phi = testing::uniform(rng, 0.0, 1.0);
            f.provenance = Provenance::Elicited;
        }
        ids.push_back(f.id);
        space.factors[f.id] = f;
    }
    std::size_t next = 0;
    while (next < ids.size()) {
        const std::size_t take = std::min<std::size_t>(ids.size() - next, static_cast<std::size_t>(testing::uniform_int(rng, 1, 5)));
        if (rng() % 3 == 0) {
            space.unclustered.insert(space.unclustered.end(), ids.begin() + static_cast<long>(next),
                                     ids.begin() + static_cast<long>(next + take));
        } else {
            FactorCluster c;
            c.theme = "Theme " + std::to_string(space.clusters.size());
            c.members.assign(ids.begin() + static_cast<long>(next), ids.begin() + static_cast<long>(next + take));
            if (rng() & 1) c.prototype = Vector{testing::uniform(rng, -1, 1), 1.0 / 3.0, 1e-300};
            space.clusters.push_back(c);
        }
        next += take;
    }
    space.stats = {testing::uniform_int(rng, 0, 9), ids.size(), space.clusters.size()};
    return space;
}

}  // namespace

TEST_CASE("canonical text and content ids") {
    CHECK(text::canonicalize("  heat \t loss\n\n fast ") == "heat loss fast");
    CHECK(text::canonicalize("") == "");
    CHECK(text::normalize("Café  AU lait") == "café au lait");
    CHECK(text::normalize("STRASSE") == text::normalize("Straße"));
    const auto id = text::content_id("Heat loss");
    CHECK(id.size() == 17);
    CHECK(id[0] == 'f');
    CHECK(id == text::content_id("  heat   LOSS "));
    CHECK(id != text::content_id("heat loss!"));
    CHECK(make_factor(" Heat  loss ").text == "Heat loss");
    CHECK(make_factor("Heat loss").id == id);
    // FIPS 180-2 test vector.
    CHECK(text::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(text::split("10,20,40", ',') == std::vector<std::string>{"10", "20", "40"});
}

TEST_CASE("label and provenance names round trip") {
    for (auto label : {FactorLabel::SupportsO1, FactorLabel::SupportsO2, FactorLabel::Neutral}) {
        CHECK(factor_label_from_string(to_string(label)) == label);
    }
    for (auto p : {Provenance::Elicited, Provenance::LabelInitialized}) CHECK(provenance_from_string(to_string(p)) == p);
    CHECK_FALSE(factor_label_from_string("Outcome3").has_value());
}

TEST_CASE("factor space invariants") {
    FactorSpace space;
    space.scenario_id = "s";
    const auto a = make_factor("alpha"), b = make_factor("beta"), c = make_factor("gamma");
    space.factors = {{a.id, a}, {b.id, b}, {c.id, c}};
    space.clusters = {{"T", {a.id, b.id}, std::nullopt}};
    space.unclustered = {c.id};
    CHECK(validate_factor_space(space).empty());
    CHECK(space.factor(a.id).text == "alpha");
    CHECK_THROWS_AS(space.factor("missing"), PreconditionError);

    auto dup = space;
    dup.unclustered.push_back(a.id);
    CHECK_FALSE(validate_factor_space(dup).empty());
    auto dangling = space;
    dangling.unclustered.push_back("f0000000000000000");
    CHECK_FALSE(validate_factor_space(dangling).empty());
    auto missing = space;
    missing.unclustered.clear();
    CHECK_FALSE(validate_factor_space(missing).empty());
    auto empty_cluster = space;
    empty_cluster.clusters.push_back({"Empty", {}, std::nullopt});
    CHECK_FALSE(validate_factor_space(empty_cluster).empty());
    auto bad_phi = space;
    bad_phi.factors[a.id].phi = 1.5;
    CHECK_FALSE(validate_factor_space(bad_phi).empty());
    auto bad_id = space;
    bad_id.factors[a.id].id = b.id;
    CHECK_FALSE(validate_factor_space(bad_id).empty());
}

TEST_CASE("space documents round trip through JSON") {
    Rng rng(3);
    for (int draw = 0; draw < 200; ++draw) {
        SpaceDocument doc{{"id" + std::to_string(draw), draw % 5 ? "A scenario" : "", "yes", "no"}, random_space(rng)};
        REQUIRE(validate_factor_space(doc.space).empty());
        const auto json = space_document_to_json(doc);
        CHECK(space_document_from_json(json) == doc);
        CHECK(space_document_to_json(space_document_from_json(json)) == json);
    }
}

TEST_CASE("space documents on disk") {
    Rng rng(8);
    const auto dir = fs::temp_directory_path() / ("anchor-domain-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    SpaceDocument doc{{"s", "d", "o1", "o2"}, random_space(rng)};
    write_space_document(dir / "space.json", doc);
    CHECK(read_space_document(dir / "space.json") == doc);
    CHECK_THROWS_AS(read_space_document(dir / "absent.json"), IoError);
    CHECK_THROWS_AS(space_document_from_json("{\"format\": \"other\"}"), Error);
    CHECK_THROWS_AS(space_document_from_json("not json"), Error);
    auto text = space_document_to_json(doc);
    const auto pos = text.find("\"version\":1");
    if (pos != std::string::npos) {
        text.replace(pos, 11, "\"version\":2");
        CHECK_THROWS_AS(space_document_from_json(text), Error);
    }
    fs::remove_all(dir);
}

TEST_CASE("configuration defaults and validation") {
    const PipelineConfig defaults;
    CHECK(defaults.abduction.n_target == 80);
    CHECK(defaults.abduction.batch == 10);
    CHECK(defaults.abduction.max_rounds == 20);
    CHECK(defaults.mapping.rounds == 3);
    CHECK(defaults.mapping.vote_ratio == 0.5);
    CHECK(defaults.decision.tau_dec == 0.9);
    CHECK_NOTHROW(defaults.validate());
    const auto lc = PipelineConfig::long_context();
    CHECK(lc.abduction.n_target == 40);
    CHECK(lc.abduction.batch == 5);
    CHECK(lc.abduction.max_rounds == 10);

    auto bad = defaults;
    bad.abduction.label_votes = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = defaults;
    bad.inference.w_nb = 0.7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.inference.aggregator = Aggregator::BMA;
    CHECK_NOTHROW(bad.validate());
    bad = defaults;
    bad.abduction.batch = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = defaults;
    bad.inference.clamp = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("configuration JSON") {
    auto config = PipelineConfig::long_context();
    config.mapping.k1 = 7;
    config.inference.aggregator = Aggregator::BMA;
    config.inference.tau = 0.6;
    CHECK(config_from_json(config_to_json(config)) == config);

    const auto partial = config_from_json(R"({"mapping": {"rounds": 5}})");
    CHECK(partial.mapping.rounds == 5);
    CHECK(partial.abduction == PipelineConfig{}.abduction);

    CHECK_THROWS_AS(config_from_json("{"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"mapping": {"roundz": 5}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"mapping": {"rounds": "five"}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"inference": {"aggregator": "MAX"}})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("space digest tracks space-shaping fields only") {
    const PipelineConfig base;
    const auto d = base.space_digest("mock:hash-64");
    CHECK(d.size() == 16);
    CHECK(d == PipelineConfig{}.space_digest("mock:hash-64"));
    CHECK(d != base.space_digest("mock:hash-32"));
    auto changed = base;
    changed.abduction.n_target = 81;
    CHECK(changed.space_digest("mock:hash-64") != d);
    changed = base;
    changed.decision.tau_dec = 0.7;
    changed.inference.tau = 0.3;
    CHECK(changed.space_digest("mock:hash-64") == d);
}
