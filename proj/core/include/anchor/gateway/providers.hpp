#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "anchor/gateway/chat.hpp"

namespace anchor::gateway {

struct FixtureRecord {
    PromptTag tag;
    std::string digest;
    std::string response;
};

// Replays recorded responses keyed by request digest. A request without a
// fixture raises FixtureMissing.
class FixtureChatProvider : public ChatProvider {
public:
    explicit FixtureChatProvider(std::vector<FixtureRecord> records);
    static FixtureChatProvider from_file(const std::filesystem::path& path);

    ChatReply complete(const ChatRequest& request) override;
    std::size_t size() const noexcept { return responses_.size(); }

private:
    std::map<std::string, std::string> responses_;
};

// Answers with a caller-supplied pure function of the request.
class ScriptedChatProvider : public ChatProvider {
public:
    using Script = std::function<std::string(const ChatRequest&)>;
    explicit ScriptedChatProvider(Script script) : script_(std::move(script)) {}
    ChatReply complete(const ChatRequest& request) override { return {script_(request), std::nullopt}; }

private:
    Script script_;
};

// Forwards to another provider and keeps every (tag, digest, response).
class RecordingChatProvider : public ChatProvider {
public:
    explicit RecordingChatProvider(ChatProvider& inner) : inner_(inner) {}
    ChatReply complete(const ChatRequest& request) override;

    std::vector<FixtureRecord> records() const;  // sorted by digest
    void write_jsonl(const std::filesystem::path& path) const;

private:
    ChatProvider& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, FixtureRecord> records_;
};

std::vector<FixtureRecord> read_fixture_jsonl(const std::filesystem::path& path);
void write_fixture_jsonl(const std::filesystem::path& path, const std::vector<FixtureRecord>& records);

// Deterministic bag-of-words embedder. Each token of the normalized text
// (common function words dropped) seeds a pseudo-random vector in [-1, 1]^d;
// the text embedding is the unit-normalized sum, so texts sharing words are
// close in cosine similarity.
class HashEmbedder : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dimension);

    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string model_name() const override { return "mock:hash-" + std::to_string(dimension_); }

    Vector embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
};

// Word tokens used by HashEmbedder, exposed for tests and the scripted mock.
std::vector<std::string> hash_tokens(std::string_view text);

// hash_tokens without common function words.
std::vector<std::string> content_tokens(std::string_view text);

struct EndpointSettings {
    std::string url;    // full endpoint, e.g. https://host/v1/chat/completions
    std::string model;
    std::string api_key;
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client.
class OpenAiChatProvider : public ChatProvider {
public:
    explicit OpenAiChatProvider(EndpointSettings settings);
    ChatReply complete(const ChatRequest& request) override;

private:
    EndpointSettings settings_;
};

// OpenAI-compatible embeddings client.
class OpenAiEmbeddingProvider : public EmbeddingProvider {
public:
    OpenAiEmbeddingProvider(EndpointSettings settings, std::size_t dimension);
    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string model_name() const override { return settings_.model; }

private:
    EndpointSettings settings_;
    std::size_t dimension_;
};

struct Providers {
    std::unique_ptr<ChatProvider> chat;
    std::unique_ptr<EmbeddingProvider> embedder;
};

// Reads ANCHOR_CHAT_URL / ANCHOR_CHAT_MODEL / ANCHOR_API_KEY and
// ANCHOR_EMBED_URL / ANCHOR_EMBED_MODEL / ANCHOR_EMBED_DIM.
// ANCHOR_CHAT_URL=fixture:<path> replays a fixture file;
// ANCHOR_EMBED_MODEL=mock:hash-<d> selects HashEmbedder. Throws ConfigError
// when a live endpoint lacks settings.
Providers providers_from_environment();

// Parses "mock:hash-<d>"; returns 0 when `model` is not a hash-embedder name.
std::size_t hash_embedder_dimension(std::string_view model);

}  // namespace anchor::gateway
