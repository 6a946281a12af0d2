#include "htam/catalog.hpp"

#include <fstream>
#include <sstream>

#include "htam/error.hpp"

namespace htam {

bool ToolSpec::has_param(std::string_view param) const {
  for (const auto& p : params) {
    if (p.name == param) return true;
  }
  return false;
}

ToolCatalog::ToolCatalog(std::vector<ToolSpec> tools) {
  for (auto& tool : tools) {
    if (tool.name.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "tool name must be non-empty");
    }
    if (tool.description.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "tool '" + tool.name + "' has no description");
    }
    if (index_.contains(tool.name)) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate tool '" + tool.name + "'");
    }
    index_.emplace(tool.name, tools_.size());
    tools_.push_back(std::move(tool));
  }
}

bool ToolCatalog::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const ToolSpec* ToolCatalog::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &tools_[it->second];
}

std::vector<std::string> ToolCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(tools_.size());
  for (const auto& t : tools_) out.push_back(t.name);
  return out;
}

ToolCatalog ToolCatalog::subset(const std::vector<std::string>& names) const {
  std::vector<ToolSpec> picked;
  for (const auto& n : names) {
    if (const auto* t = find(n)) picked.push_back(*t);
  }
  return ToolCatalog(std::move(picked));
}

std::string ToolCatalog::render_for_prompt() const {
  std::ostringstream out;
  for (const auto& t : tools_) out << "- " << t.name << ": " << t.description << "\n";
  return out.str();
}

ToolCatalog ToolCatalog::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kConfigError, "tool catalog must be a JSON array");
  std::vector<ToolSpec> tools;
  for (const auto& item : j) {
    ToolSpec spec;
    spec.name = item.at("name").get<std::string>();
    spec.description = item.value("description", "");
    if (item.contains("params")) {
      for (const auto& p : item.at("params")) {
        spec.params.push_back({p.at("name").get<std::string>(), p.value("type", "string"),
                               p.value("required", false)});
      }
    }
    tools.push_back(std::move(spec));
  }
  return ToolCatalog(std::move(tools));
}

ToolCatalog ToolCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open catalog " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

nlohmann::json ToolCatalog::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& t : tools_) {
    auto params = nlohmann::json::array();
    for (const auto& p : t.params) {
      params.push_back({{"name", p.name}, {"type", p.type}, {"required", p.required}});
    }
    out.push_back({{"name", t.name}, {"description", t.description}, {"params", params}});
  }
  return out;
}

}  // namespace htam
