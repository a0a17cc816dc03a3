#pragma once

#include <string>

#include <json.hpp>

#include "tsaw/tree.hpp"

namespace tsaw::tree {

// {"mode": "exponent"|"explicit", "b": real, "depth": int, "sizes": [int...]}
GrowthSpec growth_spec_from_json(const nlohmann::json& j, const std::string& field = "tree");
nlohmann::json growth_spec_to_json(const GrowthSpec& spec);
GrowthSpec load_growth_spec(const std::string& path);

}  // namespace tsaw::tree
