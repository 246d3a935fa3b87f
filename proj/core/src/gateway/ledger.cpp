#include "anchor/gateway/ledger.hpp"

#include "anchor/domain/errors.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {

TagCost CostSnapshot::chat_total() const {
    TagCost total;
    for (const auto& [tag, cost] : chat) {
        total.calls += cost.calls;
        total.tokens_in += cost.tokens_in;
        total.tokens_out += cost.tokens_out;
    }
    return total;
}

std::int64_t CostSnapshot::calls_for(PromptTag tag) const {
    auto it = chat.find(std::string(to_string(tag)));
    return it == chat.end() ? 0 : it->second.calls;
}

std::int64_t estimate_tokens(std::size_t chars) noexcept {
    return static_cast<std::int64_t>((chars + 3) / 4);
}

void CostLedger::record_chat(PromptTag tag, const Usage& usage) {
    std::lock_guard lock(mutex_);
    auto& cost = totals_.chat[std::string(to_string(tag))];
    cost.calls += 1;
    cost.tokens_in += usage.tokens_in;
    cost.tokens_out += usage.tokens_out;
}

void CostLedger::record_embedding(std::size_t texts, std::int64_t tokens) {
    std::lock_guard lock(mutex_);
    totals_.embed_calls += 1;
    totals_.embed_texts += static_cast<std::int64_t>(texts);
    totals_.embed_tokens += tokens;
}

CostSnapshot CostLedger::snapshot() const {
    std::lock_guard lock(mutex_);
    return totals_;
}

std::string cost_snapshot_to_json(const CostSnapshot& snapshot) {
    Json chat = Json::object();
    for (const auto& [tag, cost] : snapshot.chat) {
        chat[tag] = {{"calls", cost.calls}, {"tokens_in", cost.tokens_in}, {"tokens_out", cost.tokens_out}};
    }
    const Json root = {
        {"chat", chat},
        {"embed", {{"calls", snapshot.embed_calls}, {"texts", snapshot.embed_texts}, {"tokens", snapshot.embed_tokens}}},
    };
    return root.dump(2);
}

CostSnapshot cost_snapshot_from_json(const std::string& json) {
    try {
        const Json root = Json::parse(json);
        CostSnapshot snapshot;
        for (const auto& [tag, cost] : root.at("chat").items()) {
            snapshot.chat[tag] = {cost.at("calls").get<std::int64_t>(), cost.at("tokens_in").get<std::int64_t>(),
                                  cost.at("tokens_out").get<std::int64_t>()};
        }
        const auto& embed = root.at("embed");
        snapshot.embed_calls = embed.at("calls").get<std::int64_t>();
        snapshot.embed_texts = embed.at("texts").get<std::int64_t>();
        snapshot.embed_tokens = embed.at("tokens").get<std::int64_t>();
        return snapshot;
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed cost ledger: ") + e.what());
    }
}

}  // namespace anchor::gateway
