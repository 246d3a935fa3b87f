#include "anchor/gateway/extract.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include "anchor/domain/errors.hpp"
#include "anchor/domain/text.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {
namespace {

struct Segment {
    std::size_t begin;
    std::size_t end;  // one past the closing bracket
    Json value;
};

// Index one past the bracket closing the one at `open`, or npos.
std::size_t match_balanced(std::string_view raw, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            ++depth;
        } else if (c == ']' || c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

// Every parseable JSON array/object embedded in `raw`, nested ones included.
std::vector<Segment> json_segments(std::string_view raw) {
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '[' && raw[i] != '{') continue;
        const auto end = match_balanced(raw, i);
        if (end == std::string_view::npos) continue;
        Json value = Json::parse(raw.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
        if (value.is_discarded()) continue;
        segments.push_back({i, end, std::move(value)});
    }
    return segments;
}

// Applies `convert` to each segment and returns the match that ends last;
// among equal ends the outermost wins.
template <typename T, typename Convert>
T last_match(std::string_view raw, const char* schema, Convert convert) {
    auto segments = json_segments(raw);
    std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        return a.end != b.end ? a.end > b.end : a.begin < b.begin;
    });
    for (const auto& segment : segments) {
        if (std::optional<T> parsed = convert(segment.value)) return std::move(*parsed);
    }
    throw ParseError(std::string("no ") + schema + " payload in response");
}

std::optional<double> as_probability(const Json& v) {
    double p = 0.0;
    if (v.is_number()) {
        p = v.get<double>();
    } else if (v.is_string()) {
        const auto s = text::canonicalize(v.get<std::string>());
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
        if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (!(p >= 0.0 && p <= 1.0)) return std::nullopt;
    return p;
}

std::optional<StringList> as_string_list(const Json& v) {
    if (!v.is_array()) return std::nullopt;
    StringList out;
    for (const auto& item : v) {
        if (!item.is_string()) return std::nullopt;
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view after_final_answer(std::string_view raw) {
    const auto lowered = lower(raw);
    const auto pos = lowered.rfind("final answer:");
    return pos == std::string::npos ? raw : raw.substr(pos + 13);
}

std::string strip_decoration(std::string_view line) {
    auto s = text::canonicalize(line);
    auto is_decor = [](char c) { return c == '"' || c == '\'' || c == '*' || c == '`' || c == '.'; };
    while (!s.empty() && is_decor(s.front())) s.erase(s.begin());
    while (!s.empty() && is_decor(s.back())) s.pop_back();
    return text::canonicalize(s);
}

}  // namespace

std::optional<FactorLabel> label_from_answer(std::string_view answer) noexcept {
    std::string a;
    for (char c : answer) {
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
            a.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (a == "outcome1" || a == "o1" || a == "supportso1" || a == "supportsoutcome1") return FactorLabel::SupportsO1;
    if (a == "outcome2" || a == "o2" || a == "supportso2" || a == "supportsoutcome2") return FactorLabel::SupportsO2;
    if (a == "both" || a == "neutral" || a == "neither" || a == "none") return FactorLabel::Neutral;
    return std::nullopt;
}

StringList extract_string_array(std::string_view raw) {
    return last_match<StringList>(raw, "string array", as_string_list);
}

StringList extract_answer_list(std::string_view raw) {
    return last_match<StringList>(raw, "answer list", [](const Json& v) -> std::optional<StringList> {
        if (v.is_object()) {
            if (v.size() != 1 || !v.contains("answer")) return std::nullopt;
            return as_string_list(v.at("answer"));
        }
        return as_string_list(v);
    });
}

LabelMap extract_label_map(std::string_view raw) {
    return last_match<LabelMap>(raw, "label map", [](const Json& v) -> std::optional<LabelMap> {
        if (!v.is_object() || v.empty()) return std::nullopt;
        LabelMap out;
        for (const auto& [name, value] : v.items()) {
            if (!value.is_string()) return std::nullopt;
            auto label = label_from_answer(value.get<std::string>());
            if (!label) return std::nullopt;
            out.emplace_back(name, *label);
        }
        return out;
    });
}

ProbabilityMap extract_probability_map(std::string_view raw) {
    return last_match<ProbabilityMap>(raw, "probability map", [](const Json& v) -> std::optional<ProbabilityMap> {
        if (!v.is_object() || v.empty()) return std::nullopt;
        ProbabilityMap out;
        for (const auto& [name, value] : v.items()) {
            auto p = as_probability(value);
            if (!p) return std::nullopt;
            out.emplace_back(name, *p);
        }
        return out;
    });
}

LatentList extract_latents(std::string_view raw) {
    return last_match<LatentList>(raw, "latents", [](const Json& v) -> std::optional<LatentList> {
        if (!v.is_object() || !v.contains("latents") || !v.at("latents").is_array()) return std::nullopt;
        LatentList out;
        for (const auto& item : v.at("latents")) {
            if (!item.is_object() || !item.contains("name") || !item.at("name").is_string() ||
                !item.contains("factors")) {
                return std::nullopt;
            }
            auto factors = as_string_list(item.at("factors"));
            if (!factors) return std::nullopt;
            out.push_back({item.at("name").get<std::string>(), std::move(*factors)});
        }
        return out;
    });
}

ProbabilityPairMap extract_probability_pairs(std::string_view raw) {
    return last_match<ProbabilityPairMap>(
        raw, "probability pair map", [](const Json& v) -> std::optional<ProbabilityPairMap> {
            if (!v.is_object() || v.empty()) return std::nullopt;
            ProbabilityPairMap out;
            for (const auto& [name, value] : v.items()) {
                if (!value.is_array() || value.size() != 2) return std::nullopt;
                auto p1 = as_probability(value[0]);
                auto p0 = as_probability(value[1]);
                if (!p1 || !p0) return std::nullopt;
                out.emplace_back(name, std::make_pair(*p1, *p0));
            }
            return out;
        });
}

StringList extract_sentences(std::string_view raw) {
    StringList numbered;
    StringList plain;
    std::size_t start = 0;
    while (start < raw.size()) {
        auto end = raw.find('\n', start);
        if (end == std::string_view::npos) end = raw.size();
        auto line = text::canonicalize(raw.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;

        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
            auto body = text::canonicalize(std::string_view(line).substr(i + 1));
            if (!body.empty()) numbered.push_back(std::move(body));
            continue;
        }
        if (line[0] == '-' || line[0] == '*') {
            auto body = text::canonicalize(std::string_view(line).substr(1));
            if (!body.empty()) numbered.push_back(std::move(body));
            continue;
        }
        plain.push_back(std::move(line));
    }
    if (!numbered.empty()) return numbered;
    if (!plain.empty()) return plain;
    throw ParseError("no sentences in response");
}

std::string extract_theme(std::string_view raw) {
    auto body = after_final_answer(raw);
    std::size_t start = 0;
    while (start < body.size()) {
        auto end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        auto line = strip_decoration(body.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        if (lower(line).rfind("theme:", 0) == 0) line = strip_decoration(std::string_view(line).substr(6));
        if (line.empty()) continue;
        const auto words = static_cast<std::size_t>(std::count(line.begin(), line.end(), ' ')) + 1;
        if (words > 3) throw ParseError("theme longer than three words: " + line);
        return line;
    }
    throw ParseError("no theme in response");
}

Payload extract_structured(std::string_view raw, PromptTag tag) {
    switch (tag) {
        case PromptTag::SentenceGen: return extract_sentences(raw);
        case PromptTag::FactorExtract:
        case PromptTag::Reflect:
        case PromptTag::Prune: return extract_string_array(raw);
        case PromptTag::MapVote: return extract_answer_list(raw);
        case PromptTag::LabelVote: return extract_label_map(raw);
        case PromptTag::Theme: return extract_theme(raw);
        case PromptTag::PhiElicit: return extract_probability_map(raw);
        case PromptTag::LatentDiscover: return extract_latents(raw);
        case PromptTag::LatentElicit: return extract_probability_pairs(raw);
    }
    throw ParseError("unknown prompt tag");
}

}  // namespace anchor::gateway
