#include "anchor/gateway/chat.hpp"

#include "anchor/domain/text.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {

std::string_view to_string(PromptTag tag) noexcept {
    switch (tag) {
        case PromptTag::SentenceGen: return "SentenceGen";
        case PromptTag::FactorExtract: return "FactorExtract";
        case PromptTag::LabelVote: return "LabelVote";
        case PromptTag::Theme: return "Theme";
        case PromptTag::Prune: return "Prune";
        case PromptTag::MapVote: return "MapVote";
        case PromptTag::Reflect: return "Reflect";
        case PromptTag::PhiElicit: return "PhiElicit";
        case PromptTag::LatentDiscover: return "LatentDiscover";
        case PromptTag::LatentElicit: return "LatentElicit";
    }
    return "SentenceGen";
}

std::optional<PromptTag> prompt_tag_from_string(std::string_view name) noexcept {
    for (PromptTag tag : kAllPromptTags) {
        if (to_string(tag) == name) return tag;
    }
    return std::nullopt;
}

std::string ChatRequest::digest() const {
    Json turns_json = Json::array();
    for (const auto& turn : turns) turns_json.push_back({turn.role, turn.text});
    const Json canonical = {{"tag", to_string(tag)}, {"system", system}, {"turns", turns_json}, {"sample", sample}};
    return text::sha256_hex(canonical.dump()).substr(0, 24);
}

std::size_t ChatRequest::char_count() const noexcept {
    std::size_t n = system.size();
    for (const auto& turn : turns) n += turn.text.size();
    return n;
}

}  // namespace anchor::gateway
