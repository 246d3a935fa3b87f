#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/domain/types.hpp"

namespace anchor::gateway {

// Identifies the prompt template; each tag fixes the expected response schema.
enum class PromptTag {
    SentenceGen,
    FactorExtract,
    LabelVote,
    Theme,
    Prune,
    MapVote,
    Reflect,
    PhiElicit,
    LatentDiscover,
    LatentElicit,
};

inline constexpr PromptTag kAllPromptTags[] = {
    PromptTag::SentenceGen, PromptTag::FactorExtract, PromptTag::LabelVote, PromptTag::Theme,
    PromptTag::Prune,       PromptTag::MapVote,       PromptTag::Reflect,   PromptTag::PhiElicit,
    PromptTag::LatentDiscover, PromptTag::LatentElicit,
};

std::string_view to_string(PromptTag tag) noexcept;
std::optional<PromptTag> prompt_tag_from_string(std::string_view name) noexcept;

struct ChatTurn {
    std::string role;  // "user" or "assistant"
    std::string text;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct ChatRequest {
    PromptTag tag = PromptTag::SentenceGen;
    std::string system;
    std::vector<ChatTurn> turns;
    double temperature = 0.5;
    // Index of a repeated draw of the same prompt (self-consistency votes,
    // generation rounds). Live providers ignore it; it lets a pure mock return
    // different answers for different draws.
    int sample = 0;

    // Canonical content digest over (tag, system, turns, sample). Temperature
    // is excluded.
    std::string digest() const;

    // Number of characters across system and turns.
    std::size_t char_count() const noexcept;
};

struct Usage {
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
};

struct ChatReply {
    std::string text;
    std::optional<Usage> usage;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatReply complete(const ChatRequest& request) = 0;
};

struct EmbeddingRequest {
    std::vector<std::string> texts;
    std::size_t expected_dim = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string model_name() const = 0;
};

}  // namespace anchor::gateway
