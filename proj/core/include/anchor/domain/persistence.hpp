#pragma once

#include <filesystem>
#include <string>

#include "anchor/domain/types.hpp"

namespace anchor {

inline constexpr int kFactorSpaceFormatVersion = 1;

// A factor space together with the scenario it was built for.
struct SpaceDocument {
    Scenario scenario;
    FactorSpace space;

    friend bool operator==(const SpaceDocument&, const SpaceDocument&) = default;
};

std::string space_document_to_json(const SpaceDocument& document);
SpaceDocument space_document_from_json(const std::string& json);

void write_space_document(const std::filesystem::path& path, const SpaceDocument& document);
SpaceDocument read_space_document(const std::filesystem::path& path);

}  // namespace anchor
