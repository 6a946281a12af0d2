#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace htam {

struct ParamSpec {
  std::string name;
  std::string type;
  bool required = false;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;

  bool has_param(std::string_view param) const;
};

// Ordered tool universe. Names are unique; insertion order is preserved for
// prompt rendering.
class ToolCatalog {
 public:
  ToolCatalog() = default;
  explicit ToolCatalog(std::vector<ToolSpec> tools);

  bool contains(std::string_view name) const;
  const ToolSpec* find(std::string_view name) const;
  const std::vector<ToolSpec>& tools() const { return tools_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return tools_.size(); }
  bool empty() const { return tools_.empty(); }

  // Restricts the catalog to `names` (in that order); unknown names are skipped.
  ToolCatalog subset(const std::vector<std::string>& names) const;

  // "- name: description" lines, the format every planner prompt embeds.
  std::string render_for_prompt() const;

  static ToolCatalog from_json(const nlohmann::json& j);
  static ToolCatalog load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

 private:
  std::vector<ToolSpec> tools_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace htam
