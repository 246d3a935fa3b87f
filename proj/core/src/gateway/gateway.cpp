#include "anchor/gateway/gateway.hpp"

#include <cmath>

namespace anchor::gateway {
namespace {

class SlotGuard {
public:
    explicit SlotGuard(InFlightLimit& limit) : limit_(limit) { limit_.acquire(); }
    ~SlotGuard() { limit_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    InFlightLimit& limit_;
};

}  // namespace

void InFlightLimit::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
}

void InFlightLimit::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

Gateway::Gateway(ChatProvider& chat, EmbeddingProvider& embedder, PromptLibrary prompts, GatewayOptions options)
    : chat_(chat),
      embedder_(embedder),
      prompts_(std::move(prompts)),
      options_(options),
      limit_(options.max_in_flight) {
    if (options_.retries < 0) throw ConfigError("retries must be non-negative");
}

ChatReply Gateway::chat_complete(const ChatRequest& request) {
    ChatReply reply;
    {
        SlotGuard slot(limit_);
        reply = chat_.complete(request);
    }
    Usage usage = reply.usage.value_or(
        Usage{estimate_tokens(request.char_count()), estimate_tokens(reply.text.size())});
    ledger_.record_chat(request.tag, usage);
    return reply;
}

std::vector<Vector> Gateway::embed(const EmbeddingRequest& request) {
    if (request.texts.empty()) return {};
    std::vector<Vector> vectors;
    {
        SlotGuard slot(limit_);
        vectors = embedder_.embed(request.texts);
    }
    if (vectors.size() != request.texts.size()) {
        throw TransportError("embedding provider returned " + std::to_string(vectors.size()) + " vectors for " +
                             std::to_string(request.texts.size()) + " texts");
    }
    std::size_t chars = 0;
    for (const auto& t : request.texts) chars += t.size();
    for (const auto& v : vectors) {
        if (v.size() != request.expected_dim) throw DimensionMismatch(request.expected_dim, v.size());
        for (double x : v) {
            if (!std::isfinite(x)) throw TransportError("embedding provider returned a non-finite value");
        }
    }
    ledger_.record_embedding(request.texts.size(), estimate_tokens(chars));
    return vectors;
}

std::vector<Vector> Gateway::embed(std::span<const std::string> texts) {
    return embed(EmbeddingRequest{{texts.begin(), texts.end()}, embedder_.dimension()});
}

ChatRequest Gateway::render(PromptTag tag, const PromptVars& vars, int sample) const {
    return prompts_.render(tag, vars, options_.temperature, sample);
}

}  // namespace anchor::gateway
