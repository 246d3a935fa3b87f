#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "anchor/domain/errors.hpp"
#include "anchor/gateway/extract.hpp"
#include "anchor/gateway/gateway.hpp"
#include "anchor/gateway/providers.hpp"
#include "anchor/support/parallel.hpp"
#include "doctest.h"
#include "generators.hpp"
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

using namespace anchor;
using namespace anchor::gateway;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("anchor-gateway-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

class FixedEmbedder : public EmbeddingProvider {
public:
    FixedEmbedder(std::size_t claimed, std::vector<Vector> reply) : claimed_(claimed), reply_(std::move(reply)) {}
    std::vector<Vector> embed(std::span<const std::string>) override { return reply_; }
    std::size_t dimension() const override { return claimed_; }
    std::string model_name() const override { return "fixed"; }

private:
    std::size_t claimed_;
    std::vector<Vector> reply_;
};

ChatRequest simple_request(PromptTag tag = PromptTag::FactorExtract) {
    ChatRequest r;
    r.tag = tag;
    r.system = "sys";
    r.turns = {{"user", "hello"}};
    return r;
}

}  // namespace

TEST_CASE("extraction of each payload schema") {
    CHECK(extract_string_array("Thought: two factors.\nFinal answer: [\"A\",\"B\"]") == StringList{"A", "B"});
    const auto labels = extract_label_map("{\"Pace consistency\": \"Outcome1\"}");
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].first == "Pace consistency");
    CHECK(labels[0].second == FactorLabel::SupportsO1);
    CHECK(extract_label_map("Final answer: {\"Weather conditions\": \"Both\"}")[0].second == FactorLabel::Neutral);
    CHECK_THROWS_AS(extract_string_array("no payload here"), ParseError);

    const auto phis = extract_probability_map(
        "Thought: LEDs use less power.\nFinal answer:\n{\"Initial cost per bulb\": 0.30, \"Energy consumption per "
        "hour\": 0.95}");
    REQUIRE(phis.size() == 2);
    CHECK(phis[0] == std::make_pair(std::string("Energy consumption per hour"), 0.95));
    CHECK(phis[1] == std::make_pair(std::string("Initial cost per bulb"), 0.30));
    CHECK_THROWS_AS(extract_probability_map("Final answer: {\"x\": 1.7}"), ParseError);

    const auto pairs = extract_probability_pairs("Final answer:\n{\"Performance\": [0.85, 0.15], \"Stability\": "
                                                 "[0.30, 0.70]}");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].second == std::make_pair(0.85, 0.15));
    CHECK_THROWS_AS(extract_probability_pairs("{\"Performance\": [0.85, -0.1]}"), ParseError);

    const auto latents = extract_latents(
        "Final answer:\n{\"latents\": [{\"name\": \"HealthLat\", \"factors\": [\"Nutrition\",\"Vitamins\"]}, "
        "{\"name\": \"EnjoyLat\", \"factors\": [\"Taste\",\"Convenience\"]}]}");
    REQUIRE(latents.size() == 2);
    CHECK(latents[0] == LatentSpec{"HealthLat", {"Nutrition", "Vitamins"}});

    CHECK(extract_answer_list("Final answer: {\"answer\": [\"Better time management\"]}") ==
          StringList{"Better time management"});
    CHECK(extract_sentences("1. First one.\n2) Second one.\n") == StringList{"First one.", "Second one."});
    CHECK(extract_theme("Energy Efficiency\n") == "Energy Efficiency");
}

TEST_CASE("the last well-formed payload wins") {
    CHECK(extract_string_array("Draft: [\"a\"] ... Final answer: [\"b\", \"c\"]") == StringList{"b", "c"});
    CHECK(extract_string_array("Final answer: [\"b\"] and then [1, 2]") == StringList{"b"});
}

TEST_CASE("extract_structured dispatches by tag") {
    const auto p = extract_structured("Final answer: [\"A\"]", PromptTag::FactorExtract);
    CHECK(std::get<StringList>(p) == StringList{"A"});
    const auto l = extract_structured("{\"x\": \"Outcome2\"}", PromptTag::LabelVote);
    CHECK(std::get<LabelMap>(l)[0].second == FactorLabel::SupportsO2);
}

TEST_CASE("extraction is idempotent on payload text") {
    testing::Rng rng(17);
    for (int draw = 0; draw < 200; ++draw) {
        StringList items;
        nlohmann::ordered_json map = nlohmann::ordered_json::object();
        const int n = testing::uniform_int(rng, 0, 6);
        for (int i = 0; i < n; ++i) {
            std::string s = "factor " + std::to_string(rng() % 1000) + (rng() & 1 ? " \"q\" [x]" : " {y}");
            items.push_back(s);
            map[s] = testing::uniform(rng, 0.0, 1.0);
        }
        const std::string payload = nlohmann::json(items).dump();
        const auto once = extract_string_array("Final answer: " + payload);
        CHECK(once == items);
        CHECK(extract_string_array(nlohmann::json(once).dump()) == once);
        if (n > 0) {
            const auto parsed = extract_probability_map(map.dump());
            CHECK(parsed.size() == map.size());
            for (const auto& [name, p] : parsed) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                CHECK(map.at(name).get<double>() == p);
            }
        }
    }
}

TEST_CASE("label answers") {
    CHECK(label_from_answer("Outcome1") == FactorLabel::SupportsO1);
    CHECK(label_from_answer(" outcome 2 ") == FactorLabel::SupportsO2);
    CHECK(label_from_answer("Both") == FactorLabel::Neutral);
    CHECK_FALSE(label_from_answer("maybe").has_value());
}

TEST_CASE("request digest") {
    auto a = simple_request();
    auto b = a;
    b.temperature = 0.9;
    CHECK(a.digest() == b.digest());
    b.sample = 1;
    CHECK(a.digest() != b.digest());
    b = a;
    b.tag = PromptTag::Theme;
    CHECK(a.digest() != b.digest());
    b = a;
    b.turns[0].text = "hello!";
    CHECK(a.digest() != b.digest());
    CHECK(a.char_count() == 8);
}

TEST_CASE("token estimate") {
    CHECK(estimate_tokens(0) == 0);
    CHECK(estimate_tokens(1) == 1);
    CHECK(estimate_tokens(4) == 1);
    CHECK(estimate_tokens(5) == 2);
}

TEST_CASE("ledger counts every call under concurrency") {
    ScriptedChatProvider chat([](const ChatRequest&) { return std::string("12345678"); });
    HashEmbedder embedder(8);
    Gateway gw(chat, embedder);
    support::parallel_for(200, 8, [&](std::size_t i) {
        gw.chat_complete(simple_request(i % 2 ? PromptTag::Theme : PromptTag::MapVote));
    });
    const auto snap = gw.ledger().snapshot();
    CHECK(snap.calls_for(PromptTag::Theme) == 100);
    CHECK(snap.calls_for(PromptTag::MapVote) == 100);
    CHECK(snap.chat_total().tokens_in == 200 * estimate_tokens(8));
    CHECK(snap.chat_total().tokens_out == 200 * 2);
    CHECK(cost_snapshot_from_json(cost_snapshot_to_json(snap)) == snap);
}

TEST_CASE("ask retries parse and transport failures, then gives up") {
    std::atomic<int> calls{0};
    ScriptedChatProvider chat([&](const ChatRequest&) -> std::string {
        const int n = ++calls;
        if (n == 1) throw TransportError("flaky");
        if (n < 4) return "no payload";
        return "Final answer: [\"ok\"]";
    });
    HashEmbedder embedder(8);
    Gateway gw(chat, embedder, PromptLibrary::defaults(), {3, 4, 0.5});
    const auto got = gw.ask<StringList>(simple_request(), extract_string_array);
    REQUIRE(got.has_value());
    CHECK(*got == StringList{"ok"});
    CHECK(calls == 4);

    calls = 0;
    ScriptedChatProvider never([&](const ChatRequest&) {
        ++calls;
        return std::string("nothing");
    });
    Gateway gw2(never, embedder, PromptLibrary::defaults(), {2, 4, 0.5});
    CHECK_FALSE(gw2.ask<StringList>(simple_request(), extract_string_array).has_value());
    CHECK(calls == 3);
}

TEST_CASE("fixture misses and configuration errors propagate through ask") {
    HashEmbedder embedder(8);
    FixtureChatProvider empty({});
    Gateway gw(empty, embedder);
    CHECK_THROWS_AS(gw.ask<StringList>(simple_request(), extract_string_array), FixtureMissing);
    ScriptedChatProvider denied([](const ChatRequest&) -> std::string { throw ConfigError("bad key"); });
    Gateway gw2(denied, embedder);
    CHECK_THROWS_AS(gw2.ask<StringList>(simple_request(), extract_string_array), ConfigError);
}

TEST_CASE("in-flight requests are bounded") {
    std::atomic<int> current{0}, peak{0};
    ScriptedChatProvider chat([&](const ChatRequest&) {
        const int now = ++current;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --current;
        return std::string("x");
    });
    HashEmbedder embedder(8);
    Gateway gw(chat, embedder, PromptLibrary::defaults(), {0, 2, 0.5});
    support::parallel_for(40, 8, [&](std::size_t) { gw.chat_complete(simple_request()); });
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("hash embedder reference vectors") {
    // Reference values from an independent reimplementation (FNV-1a seeded
    // splitmix64 per token, summed and normalized).
    const Vector a = {-0.14339055675896165, 0.5568455067192674,   0.5501205039150755, 0.20786126254844345,
                      -0.028912679653817525, -0.53548339978733,   0.05295282056157997, 0.18204653494345668};
    const Vector b = {-0.19229633694866607, -0.172882578761707,  0.15281148117288088, -0.37717546078383507,
                      0.41648846652105204,  0.5162541485419663,  -0.5674109609849348, 0.07473197764935649};
    const Vector cafe = {-0.057334923254573796, 0.5735835178231963,  -0.591672560439873, 0.08550505640835965,
                         -0.10301438631797627,  0.38276775289484777, 0.36534968199131557, -0.14044078692563394};
    HashEmbedder embedder(8);
    ScriptedChatProvider chat([](const ChatRequest&) { return std::string(); });
    Gateway gw(chat, embedder);
    const std::vector<std::string> texts = {"a", "b", "Heat loss, the Café", "a"};
    const auto v = gw.embed(texts);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(v[0][j] == doctest::Approx(a[j]).epsilon(1e-14));
        CHECK(v[1][j] == doctest::Approx(b[j]).epsilon(1e-14));
        CHECK(v[2][j] == doctest::Approx(cafe[j]).epsilon(1e-14));
    }
    CHECK(v[0] == v[3]);
    CHECK(v[0] != v[1]);
    for (const auto& x : v) {
        double norm = 0;
        for (double c : x) norm += c * c;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(embedder.model_name() == "mock:hash-8");
    CHECK(hash_tokens("Heat loss, the Café") == std::vector<std::string>{"heat", "loss", "the", "café"});
    CHECK(content_tokens("Heat loss, the Café") == std::vector<std::string>{"heat", "loss", "café"});
    CHECK(gw.ledger().snapshot().embed_texts == 4);
}

TEST_CASE("embedding validation") {
    ScriptedChatProvider chat([](const ChatRequest&) { return std::string(); });
    FixedEmbedder short_vectors(384, {Vector(383, 0.1)});
    Gateway gw(chat, short_vectors);
    const std::vector<std::string> one = {"x"};
    try {
        gw.embed(one);
        FAIL("expected DimensionMismatch");
    } catch (const DimensionMismatch& e) {
        CHECK(e.expected() == 384);
        CHECK(e.actual() == 383);
    }
    FixedEmbedder wrong_count(2, {Vector(2, 0.1), Vector(2, 0.1)});
    Gateway gw2(chat, wrong_count);
    CHECK_THROWS_AS(gw2.embed(one), TransportError);
    FixedEmbedder nan(2, {Vector{0.1, std::nan("")}});
    Gateway gw3(chat, nan);
    CHECK_THROWS_AS(gw3.embed(one), TransportError);
}

TEST_CASE("fixture replay round trip") {
    const auto dir = scratch_dir("fixtures");
    ScriptedChatProvider inner([](const ChatRequest& r) { return "reply to " + r.turns.back().text; });
    RecordingChatProvider recorder(inner);
    auto r1 = simple_request();
    auto r2 = simple_request(PromptTag::Theme);
    r2.sample = 3;
    recorder.complete(r1);
    recorder.complete(r2);
    recorder.write_jsonl(dir / "f.jsonl");
    REQUIRE(read_fixture_jsonl(dir / "f.jsonl").size() == 2);

    auto replay = FixtureChatProvider::from_file(dir / "f.jsonl");
    CHECK(replay.size() == 2);
    CHECK(replay.complete(r1).text == "reply to hello");
    CHECK(replay.complete(r2).text == "reply to hello");
    auto miss = r2;
    miss.sample = 4;
    CHECK_THROWS_AS(replay.complete(miss), FixtureMissing);
    fs::remove_all(dir);
}

TEST_CASE("prompt rendering and overrides") {
    auto lib = PromptLibrary::defaults();
    for (PromptTag tag : kAllPromptTags) CHECK_FALSE(lib.get(tag).user.empty());
    CHECK(substitute("a {x} {y} {", {{"x", "1"}}) == "a 1 {y} {");
    const auto r = lib.render(PromptTag::LabelVote,
                              {{"scenario", "S"}, {"outcome1", "A"}, {"outcome2", "B"}, {"factor", "F"}}, 0.3, 2);
    CHECK(r.tag == PromptTag::LabelVote);
    CHECK(r.sample == 2);
    CHECK(r.temperature == 0.3);
    CHECK(r.turns.back().text.find("Factor: F") != std::string::npos);
    CHECK(r.turns.size() == lib.get(PromptTag::LabelVote).shots.size() + 1);

    const auto dir = scratch_dir("prompts");
    std::ofstream(dir / "Theme.json") << R"({"system": "Name it.", "shots": [], "user": "Items: {factors}"})";
    CHECK(lib.load_overrides(dir) == 1);
    const auto t = lib.render(PromptTag::Theme, {{"factors", "[\"x\"]"}}, 0.5, 0);
    CHECK(t.system == "Name it.");
    CHECK(t.turns.size() == 1);
    CHECK(t.turns[0].text == "Items: [\"x\"]");
    std::ofstream(dir / "Prune.json") << "{not json";
    CHECK_THROWS_AS(lib.load_overrides(dir), ConfigError);
    CHECK_THROWS_AS(lib.load_overrides(dir / "missing"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("providers from the environment") {
    const auto dir = scratch_dir("env");
    write_fixture_jsonl(dir / "chat.jsonl", {});
    ::setenv("ANCHOR_CHAT_URL", ("fixture:" + (dir / "chat.jsonl").string()).c_str(), 1);
    ::setenv("ANCHOR_EMBED_MODEL", "mock:hash-16", 1);
    auto p = providers_from_environment();
    CHECK(dynamic_cast<FixtureChatProvider*>(p.chat.get()) != nullptr);
    CHECK(p.embedder->dimension() == 16);

    ::setenv("ANCHOR_EMBED_MODEL", "text-embed", 1);
    ::unsetenv("ANCHOR_EMBED_URL");
    CHECK_THROWS_AS(providers_from_environment(), ConfigError);
    ::setenv("ANCHOR_CHAT_URL", "https://example.invalid/v1/chat/completions", 1);
    ::unsetenv("ANCHOR_API_KEY");
    ::setenv("ANCHOR_CHAT_MODEL", "m", 1);
    CHECK_THROWS_AS(providers_from_environment(), ConfigError);
    ::unsetenv("ANCHOR_CHAT_URL");
    ::unsetenv("ANCHOR_CHAT_MODEL");
    ::unsetenv("ANCHOR_EMBED_MODEL");

    CHECK(hash_embedder_dimension("mock:hash-384") == 384);
    CHECK(hash_embedder_dimension("mock:hash-") == 0);
    CHECK(hash_embedder_dimension("mock:hash-12x") == 0);
    CHECK(hash_embedder_dimension("text-embedding-3-small") == 0);
    fs::remove_all(dir);
}

TEST_CASE("chat-completions and embeddings wire format") {
    httplib::Server server;
    nlohmann::json seen_chat, seen_embed;
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_chat = nlohmann::json::parse(req.body);
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Final answer: [\"x\"]"}}],)"
                        R"("usage":{"prompt_tokens":11,"completion_tokens":3}})",
                        "application/json");
    });
    server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen_embed = nlohmann::json::parse(req.body);
        res.set_content(R"({"data":[{"index":1,"embedding":[0,1]},{"index":0,"embedding":[1,0]}]})",
                        "application/json");
    });
    server.Post("/denied", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    OpenAiChatProvider chat({base + "/v1/chat/completions", "test-model", "secret", 5});
    auto request = simple_request();
    request.temperature = 0.5;
    const auto reply = chat.complete(request);
    CHECK(reply.text == "Final answer: [\"x\"]");
    REQUIRE(reply.usage.has_value());
    CHECK(reply.usage->tokens_in == 11);
    CHECK(reply.usage->tokens_out == 3);
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_chat["model"] == "test-model");
    CHECK(seen_chat["temperature"] == 0.5);
    CHECK(seen_chat["messages"][0]["role"] == "system");
    CHECK(seen_chat["messages"][1]["content"] == "hello");

    OpenAiEmbeddingProvider embed({base + "/v1/embeddings", "embed-model", "secret", 5}, 2);
    const std::vector<std::string> texts = {"p", "q"};
    const auto vectors = embed.embed(texts);
    CHECK(vectors[0] == Vector{1, 0});
    CHECK(vectors[1] == Vector{0, 1});
    CHECK(seen_embed["input"] == nlohmann::json::array({"p", "q"}));

    OpenAiChatProvider denied({base + "/denied", "m", "secret", 5});
    CHECK_THROWS_AS(denied.complete(request), ConfigError);
    OpenAiChatProvider broken({base + "/broken", "m", "secret", 5});
    CHECK_THROWS_AS(broken.complete(request), TransportError);

    server.stop();
    worker.join();
}

TEST_CASE("unreachable endpoint is a transport error") {
    OpenAiChatProvider chat({"http://127.0.0.1:1/v1/chat/completions", "m", "k", 2});
    CHECK_THROWS_AS(chat.complete(simple_request()), TransportError);
    CHECK_THROWS_AS(OpenAiChatProvider({"http://127.0.0.1:1/x", "m", "", 2}), ConfigError);
}
