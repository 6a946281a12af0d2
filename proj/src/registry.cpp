#include "htam/registry.hpp"

#include <fstream>
#include <set>

#include "htam/assets.hpp"
#include "htam/error.hpp"
#include "htam/parse.hpp"

namespace htam {

Registry::Registry(int layers, std::vector<SubAgentSpec> sub_agents, ToolCatalog catalog)
    : layers_(layers), sub_agents_(std::move(sub_agents)), catalog_(std::move(catalog)) {
  if (layers_ < 1) throw Error(ErrorCode::kInvalidArgument, "registry needs at least one layer");
  std::set<std::string> names;
  std::vector<int> population(layers_ + 1, 0);
  for (const auto& a : sub_agents_) {
    if (a.name.empty()) throw Error(ErrorCode::kInvalidArgument, "sub-agent with empty name");
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate sub-agent " + a.name);
    }
    if (a.layer < 1 || a.layer > layers_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sub-agent " + a.name + " on layer " + std::to_string(a.layer) + " outside 1.." +
                      std::to_string(layers_));
    }
    for (const auto& t : a.tools) {
      if (!catalog_.contains(t)) {
        throw Error(ErrorCode::kInvalidArgument, "sub-agent " + a.name + " uses unknown tool " + t);
      }
    }
    ++population[a.layer];
  }
  for (int l = 1; l <= layers_; ++l) {
    if (population[l] == 0) {
      throw Error(ErrorCode::kInvalidArgument, "layer " + std::to_string(l) + " has no sub-agent");
    }
  }
}

std::vector<const SubAgentSpec*> Registry::agents_in_layer(int layer) const {
  std::vector<const SubAgentSpec*> out;
  for (const auto& a : sub_agents_) {
    if (a.layer == layer) out.push_back(&a);
  }
  return out;
}

const SubAgentSpec* Registry::find(std::string_view name) const {
  for (const auto& a : sub_agents_) {
    if (a.name == name) return &a;
  }
  for (const auto& a : sub_agents_) {
    if (iequals(a.name, name)) return &a;
  }
  return nullptr;
}

ToolCatalog Registry::tools_of(const SubAgentSpec& agent) const { return catalog_.subset(agent.tools); }

Registry Registry::from_json(const nlohmann::json& j, ToolCatalog catalog) {
  try {
    std::vector<SubAgentSpec> agents;
    for (const auto& a : j.at("sub_agents")) {
      agents.push_back({a.at("name").get<std::string>(), a.at("layer").get<int>(),
                        a.value("description", std::string{}),
                        a.value("tools", std::vector<std::string>{})});
    }
    return Registry(j.at("layers").get<int>(), std::move(agents), std::move(catalog));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("registry JSON: ") + e.what());
  }
}

Registry Registry::load(const std::filesystem::path& path, ToolCatalog catalog) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidArgument, "malformed JSON in " + path.string());
  return from_json(j, std::move(catalog));
}

nlohmann::json Registry::to_json() const {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : sub_agents_) {
    agents.push_back({{"name", a.name}, {"layer", a.layer}, {"description", a.description}, {"tools", a.tools}});
  }
  return {{"layers", layers_}, {"sub_agents", agents}};
}

ToolCatalog earthagent_catalog() {
  return ToolCatalog::from_json(nlohmann::json::parse(asset("earthagent/catalog.json")));
}

Registry earthagent_registry() {
  return Registry::from_json(nlohmann::json::parse(asset("earthagent/registry.json")), earthagent_catalog());
}

DependencyGraph earthagent_graph() {
  return DependencyGraph::from_json(nlohmann::json::parse(asset("earthagent/graph.json")));
}

}  // namespace htam
