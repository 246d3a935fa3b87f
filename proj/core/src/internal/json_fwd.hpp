#pragma once

#include "json.hpp"

namespace anchor {
using Json = nlohmann::json;
}  // namespace anchor
