#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "anchor/domain/errors.hpp"
#include "anchor/gateway/providers.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {
namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

Json post_json(const EndpointSettings& settings, const Json& body) {
    const Endpoint endpoint = split_url(settings.url);
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(settings.timeout_seconds);
    client.set_write_timeout(settings.timeout_seconds);
    httplib::Headers headers = {{"Authorization", "Bearer " + settings.api_key}};

    auto result = client.Post(endpoint.path, headers, body.dump(), "application/json");
    if (!result) {
        throw TransportError("request to " + settings.url + " failed: " + httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
        throw ConfigError("provider rejected credentials (HTTP " + std::to_string(result->status) + ")");
    }
    if (result->status != 200) {
        throw TransportError("provider returned HTTP " + std::to_string(result->status) + ": " +
                             result->body.substr(0, 200));
    }
    Json parsed = Json::parse(result->body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) throw TransportError("provider returned a non-JSON body");
    return parsed;
}

}  // namespace

OpenAiChatProvider::OpenAiChatProvider(EndpointSettings settings) : settings_(std::move(settings)) {
    if (settings_.api_key.empty()) throw ConfigError("missing API key for chat provider");
    split_url(settings_.url);
}

ChatReply OpenAiChatProvider::complete(const ChatRequest& request) {
    Json messages = Json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    for (const auto& turn : request.turns) messages.push_back({{"role", turn.role}, {"content", turn.text}});
    const Json body = {{"model", settings_.model}, {"messages", messages}, {"temperature", request.temperature}};

    const Json response = post_json(settings_, body);
    try {
        ChatReply reply;
        reply.text = response.at("choices").at(0).at("message").at("content").get<std::string>();
        if (response.contains("usage") && response.at("usage").is_object()) {
            const auto& u = response.at("usage");
            reply.usage = Usage{u.value("prompt_tokens", std::int64_t{0}), u.value("completion_tokens", std::int64_t{0})};
        }
        return reply;
    } catch (const Json::exception& e) {
        throw TransportError(std::string("malformed chat-completions response: ") + e.what());
    }
}

OpenAiEmbeddingProvider::OpenAiEmbeddingProvider(EndpointSettings settings, std::size_t dimension)
    : settings_(std::move(settings)), dimension_(dimension) {
    if (settings_.api_key.empty()) throw ConfigError("missing API key for embedding provider");
    split_url(settings_.url);
}

std::vector<Vector> OpenAiEmbeddingProvider::embed(std::span<const std::string> texts) {
    const Json body = {{"model", settings_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const Json response = post_json(settings_, body);
    try {
        const auto& data = response.at("data");
        std::vector<Vector> out(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto index = data[i].value("index", i);
            if (index >= out.size()) throw TransportError("embedding index out of range");
            out[index] = data[i].at("embedding").get<Vector>();
        }
        return out;
    } catch (const Json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what());
    }
}

}  // namespace anchor::gateway
