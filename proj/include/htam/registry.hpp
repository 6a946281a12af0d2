#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "htam/catalog.hpp"
#include "htam/graph.hpp"
#include "json.hpp"

namespace htam {

struct SubAgentSpec {
  std::string name;
  int layer = 1;
  std::string description;
  std::vector<std::string> tools;
};

// Sub-agents arranged on layers 1..L over a shared tool catalog.
class Registry {
 public:
  Registry() = default;
  // Throws Error(kInvalidArgument) when a layer is empty, names collide, a
  // layer index is out of range, or a tool is missing from the catalog.
  Registry(int layers, std::vector<SubAgentSpec> sub_agents, ToolCatalog catalog);

  int layers() const { return layers_; }
  const std::vector<SubAgentSpec>& sub_agents() const { return sub_agents_; }
  const ToolCatalog& catalog() const { return catalog_; }

  std::vector<const SubAgentSpec*> agents_in_layer(int layer) const;
  // Exact match first, then case-insensitive.
  const SubAgentSpec* find(std::string_view name) const;
  ToolCatalog tools_of(const SubAgentSpec& agent) const;

  // {"layers": L, "sub_agents": [{name, layer, description, tools}]}
  static Registry from_json(const nlohmann::json& j, ToolCatalog catalog);
  static Registry load(const std::filesystem::path& path, ToolCatalog catalog);
  nlohmann::json to_json() const;

 private:
  int layers_ = 0;
  std::vector<SubAgentSpec> sub_agents_;
  ToolCatalog catalog_;
};

// Bundled 3-layer remote sensing instantiation.
ToolCatalog earthagent_catalog();
Registry earthagent_registry();
DependencyGraph earthagent_graph();

}  // namespace htam
