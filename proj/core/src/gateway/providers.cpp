#include "anchor/gateway/providers.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <set>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {
namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const std::set<std::string, std::less<>>& stopwords() {
    static const std::set<std::string, std::less<>> words = {
        "a",  "an", "and", "are", "as",   "at",   "be", "by",   "for",  "from", "in",
        "is", "it", "its", "of",  "on",   "or",   "the", "that", "this", "to",   "with",
    };
    return words;
}

std::string getenv_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

}  // namespace

FixtureChatProvider::FixtureChatProvider(std::vector<FixtureRecord> records) {
    for (auto& r : records) responses_[r.digest] = std::move(r.response);
}

FixtureChatProvider FixtureChatProvider::from_file(const std::filesystem::path& path) {
    return FixtureChatProvider(read_fixture_jsonl(path));
}

ChatReply FixtureChatProvider::complete(const ChatRequest& request) {
    const auto digest = request.digest();
    auto it = responses_.find(digest);
    if (it == responses_.end()) {
        throw FixtureMissing("no fixture for " + std::string(to_string(request.tag)) + " request " + digest);
    }
    return {it->second, std::nullopt};
}

ChatReply RecordingChatProvider::complete(const ChatRequest& request) {
    ChatReply reply = inner_.complete(request);
    std::lock_guard lock(mutex_);
    records_[request.digest()] = FixtureRecord{request.tag, request.digest(), reply.text};
    return reply;
}

std::vector<FixtureRecord> RecordingChatProvider::records() const {
    std::lock_guard lock(mutex_);
    std::vector<FixtureRecord> out;
    out.reserve(records_.size());
    for (const auto& [digest, record] : records_) out.push_back(record);
    return out;
}

void RecordingChatProvider::write_jsonl(const std::filesystem::path& path) const {
    write_fixture_jsonl(path, records());
}

std::vector<FixtureRecord> read_fixture_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fixture file " + path.string());
    std::vector<FixtureRecord> records;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::canonicalize(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            auto tag = prompt_tag_from_string(j.at("tag").get<std::string>());
            if (!tag) throw SchemaError(number, "unknown prompt tag");
            records.push_back({*tag, j.at("digest").get<std::string>(), j.at("response").get<std::string>()});
        } catch (const Json::exception& e) {
            throw SchemaError(number, e.what());
        }
    }
    return records;
}

void write_fixture_jsonl(const std::filesystem::path& path, const std::vector<FixtureRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write fixture file " + path.string());
    for (const auto& r : records) {
        Json j = {{"tag", std::string(to_string(r.tag))}, {"digest", r.digest}, {"response", r.response}};
        out << j.dump() << '\n';
    }
}

std::vector<std::string> hash_tokens(std::string_view raw) {
    const std::string folded = text::normalize(raw);
    std::vector<std::string> tokens;
    std::string current;
    for (char c : folded) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isalnum(u)) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> content_tokens(std::string_view raw) {
    std::vector<std::string> tokens;
    for (auto& t : hash_tokens(raw)) {
        if (!stopwords().count(t)) tokens.push_back(std::move(t));
    }
    return tokens;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw ConfigError("hash embedder dimension must be positive");
}

Vector HashEmbedder::embed_one(std::string_view raw) const {
    auto tokens = content_tokens(raw);
    if (tokens.empty()) tokens = hash_tokens(raw);
    if (tokens.empty()) tokens.push_back(text::normalize(raw));

    Vector v(dimension_, 0.0);
    for (const auto& token : tokens) {
        std::uint64_t state = fnv1a64(token);
        for (std::size_t j = 0; j < dimension_; ++j) {
            const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            v[j] += 2.0 * u - 1.0;
        }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

std::vector<Vector> HashEmbedder::embed(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

std::size_t hash_embedder_dimension(std::string_view model) {
    constexpr std::string_view prefix = "mock:hash-";
    if (model.substr(0, prefix.size()) != prefix) return 0;
    const auto digits = model.substr(prefix.size());
    if (digits.empty()) return 0;
    std::size_t d = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return 0;
        d = d * 10 + static_cast<std::size_t>(c - '0');
    }
    return d;
}

Providers providers_from_environment() {
    Providers providers;

    const std::string chat_url = getenv_or("ANCHOR_CHAT_URL");
    if (chat_url.rfind("fixture:", 0) == 0) {
        providers.chat = std::make_unique<FixtureChatProvider>(FixtureChatProvider::from_file(chat_url.substr(8)));
    } else {
        EndpointSettings s{chat_url, getenv_or("ANCHOR_CHAT_MODEL"), getenv_or("ANCHOR_API_KEY")};
        if (s.url.empty()) throw ConfigError("ANCHOR_CHAT_URL is not set");
        if (s.model.empty()) throw ConfigError("ANCHOR_CHAT_MODEL is not set");
        if (s.api_key.empty()) throw ConfigError("ANCHOR_API_KEY is not set");
        providers.chat = std::make_unique<OpenAiChatProvider>(std::move(s));
    }

    const std::string embed_model = getenv_or("ANCHOR_EMBED_MODEL");
    if (std::size_t d = hash_embedder_dimension(embed_model); d > 0) {
        providers.embedder = std::make_unique<HashEmbedder>(d);
    } else {
        EndpointSettings s{getenv_or("ANCHOR_EMBED_URL"), embed_model, getenv_or("ANCHOR_API_KEY")};
        if (s.url.empty()) throw ConfigError("ANCHOR_EMBED_URL is not set");
        if (s.model.empty()) throw ConfigError("ANCHOR_EMBED_MODEL is not set");
        if (s.api_key.empty()) throw ConfigError("ANCHOR_API_KEY is not set");
        const std::string dim = getenv_or("ANCHOR_EMBED_DIM", "384");
        std::size_t parsed = 0;
        try {
            parsed = static_cast<std::size_t>(std::stoul(dim));
        } catch (const std::exception&) {
            throw ConfigError("ANCHOR_EMBED_DIM is not a positive integer: " + dim);
        }
        if (parsed == 0) throw ConfigError("ANCHOR_EMBED_DIM must be positive");
        providers.embedder = std::make_unique<OpenAiEmbeddingProvider>(std::move(s), parsed);
    }
    return providers;
}

}  // namespace anchor::gateway
