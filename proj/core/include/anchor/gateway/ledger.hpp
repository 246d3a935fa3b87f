#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>

#include "anchor/gateway/chat.hpp"

namespace anchor::gateway {

struct TagCost {
    std::int64_t calls = 0;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;

    friend bool operator==(const TagCost&, const TagCost&) = default;
};

struct CostSnapshot {
    std::map<std::string, TagCost> chat;  // keyed by tag name
    std::int64_t embed_calls = 0;
    std::int64_t embed_texts = 0;
    std::int64_t embed_tokens = 0;

    TagCost chat_total() const;
    std::int64_t calls_for(PromptTag tag) const;

    friend bool operator==(const CostSnapshot&, const CostSnapshot&) = default;
};

// Token estimate used when a provider reports no usage: ceil(chars / 4).
std::int64_t estimate_tokens(std::size_t chars) noexcept;

// Thread-safe, monotonically non-decreasing counters for one run.
class CostLedger {
public:
    void record_chat(PromptTag tag, const Usage& usage);
    void record_embedding(std::size_t texts, std::int64_t tokens);
    CostSnapshot snapshot() const;

private:
    mutable std::mutex mutex_;
    CostSnapshot totals_;
};

std::string cost_snapshot_to_json(const CostSnapshot& snapshot);
CostSnapshot cost_snapshot_from_json(const std::string& json);

}  // namespace anchor::gateway
