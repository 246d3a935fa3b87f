#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "anchor/domain/types.hpp"

namespace anchor::text {

// Trims and collapses internal whitespace runs to a single space.
std::string canonicalize(std::string_view text);

// Unicode case fold of the canonical form; the dedup key for factors.
std::string normalize(std::string_view text);

// Stable id for a factor text: "f" followed by 16 hex digits of SHA-256 over
// the normalized text.
FactorId content_id(std::string_view text);

std::string sha256_hex(std::string_view bytes);

// Splits on commas; used for CLI lists such as "10,20,40".
std::vector<std::string> split(std::string_view text, char separator);

}  // namespace anchor::text
