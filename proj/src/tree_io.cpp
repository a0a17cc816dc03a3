#include "tsaw/tree_io.hpp"

#include <fstream>

#include "tsaw/error.hpp"

namespace tsaw::tree {

GrowthSpec growth_spec_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError("expected an object", field);
  const std::string mode = j.value("mode", std::string("exponent"));
  GrowthSpec spec;
  try {
    if (mode == "exponent") {
      if (!j.contains("b")) throw ValidationError("missing growth exponent", field + ".b");
      if (!j.contains("depth")) throw ValidationError("missing depth", field + ".depth");
      spec = GrowthSpec::from_exponent(j.at("b").get<double>(), j.at("depth").get<int>());
    } else if (mode == "explicit") {
      if (!j.contains("sizes")) throw ValidationError("missing level sizes", field + ".sizes");
      spec = GrowthSpec::from_sizes(j.at("sizes").get<std::vector<std::size_t>>());
    } else {
      throw ValidationError("mode must be \"exponent\" or \"explicit\"", field + ".mode");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tree spec: ") + e.what(), field);
  }
  try {
    (void)spec.targets();
  } catch (const ValidationError& e) {
    // re-root the spec-relative path ("tree.depth") under the caller's field
    const std::string& inner = e.field();
    const auto dot = inner.find('.');
    const std::string sub = dot == std::string::npos ? std::string() : inner.substr(dot);
    std::string msg = e.what();
    if (!inner.empty() && msg.rfind(inner + ": ", 0) == 0) msg = msg.substr(inner.size() + 2);
    throw ValidationError(msg, field + sub);
  }
  return spec;
}

nlohmann::json growth_spec_to_json(const GrowthSpec& spec) {
  if (spec.mode == GrowthSpec::Mode::exponent)
    return {{"mode", "exponent"}, {"b", spec.exponent}, {"depth", spec.depth}};
  return {{"mode", "explicit"}, {"sizes", spec.sizes}};
}

GrowthSpec load_growth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open tree spec file '" + path + "'", "tree_spec");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("cannot parse tree spec: ") + e.what(), "tree_spec");
  }
  return growth_spec_from_json(j, "tree_spec");
}

}  // namespace tsaw::tree
