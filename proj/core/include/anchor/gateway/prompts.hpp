#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anchor/gateway/chat.hpp"

namespace anchor::gateway {

struct PromptTemplate {
    std::string system;
    std::vector<ChatTurn> shots;  // few-shot user/assistant pairs
    std::string user;             // final user turn; {placeholders} substituted
};

using PromptVars = std::map<std::string, std::string>;

// Built-in prompt set, one template per tag. Any template can be replaced by a
// `<Tag>.json` file ({"system", "shots": [{"role", "text"}], "user"}) in an
// override directory.
class PromptLibrary {
public:
    static PromptLibrary defaults();

    // Returns the number of templates overridden. Throws ConfigError on a
    // malformed override file.
    int load_overrides(const std::filesystem::path& directory);

    const PromptTemplate& get(PromptTag tag) const;
    void set(PromptTag tag, PromptTemplate prompt);

    ChatRequest render(PromptTag tag, const PromptVars& vars, double temperature, int sample) const;

private:
    std::map<PromptTag, PromptTemplate> templates_;
};

// Replaces each `{key}` for keys present in `vars`; other braces are untouched.
std::string substitute(const std::string& pattern, const PromptVars& vars);

// Renders strings as a JSON array literal (used inside prompts).
std::string json_string_array(const std::vector<std::string>& items);

}  // namespace anchor::gateway
