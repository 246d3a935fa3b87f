#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/domain/errors.hpp"
#include "anchor/gateway/chat.hpp"
#include "anchor/gateway/ledger.hpp"
#include "anchor/gateway/prompts.hpp"

namespace anchor::gateway {

struct GatewayOptions {
    int retries = 20;               // re-issues after the first failed attempt
    std::size_t max_in_flight = 4;  // concurrent provider requests
    double temperature = 0.5;
};

// Counting gate bounding the number of concurrent provider calls.
class InFlightLimit {
public:
    explicit InFlightLimit(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t available_;
};

// All model traffic goes through here: prompt rendering, concurrency bound,
// cost accounting, and parse-retry handling.
class Gateway {
public:
    Gateway(ChatProvider& chat, EmbeddingProvider& embedder, PromptLibrary prompts = PromptLibrary::defaults(),
            GatewayOptions options = {});

    // Verbatim provider text; records usage (estimated when absent).
    ChatReply chat_complete(const ChatRequest& request);

    // Checks the returned dimension against `request.expected_dim`.
    std::vector<Vector> embed(const EmbeddingRequest& request);
    std::vector<Vector> embed(std::span<const std::string> texts);

    // Issues `request` and applies `extract`; on ParseError or TransportError
    // re-issues up to options.retries times. Returns nullopt once the budget is
    // spent so the caller can apply its fallback. FixtureMissing and
    // ConfigError propagate.
    template <typename T>
    std::optional<T> ask(const ChatRequest& request, const std::function<T(std::string_view)>& extract) {
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            try {
                return extract(chat_complete(request).text);
            } catch (const ParseError&) {
            } catch (const TransportError&) {
            }
        }
        return std::nullopt;
    }

    ChatRequest render(PromptTag tag, const PromptVars& vars, int sample = 0) const;

    const PromptLibrary& prompts() const noexcept { return prompts_; }
    const GatewayOptions& options() const noexcept { return options_; }
    CostLedger& ledger() noexcept { return ledger_; }
    std::size_t embedding_dim() const { return embedder_.dimension(); }
    std::string embedding_model() const { return embedder_.model_name(); }

private:
    ChatProvider& chat_;
    EmbeddingProvider& embedder_;
    PromptLibrary prompts_;
    GatewayOptions options_;
    CostLedger ledger_;
    InFlightLimit limit_;
};

}  // namespace anchor::gateway
