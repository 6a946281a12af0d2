#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "htam/backend.hpp"
#include "htam/graph.hpp"
#include "htam/registry.hpp"
#include "json.hpp"

namespace htam {

namespace arch {
inline constexpr std::string_view kHtam = "htam";
inline constexpr std::string_view kCot = "cot";
inline constexpr std::string_view kReact = "react";
inline constexpr std::string_view kPlanExecute = "plan_execute";
inline constexpr std::string_view kDebate = "debate";
inline constexpr std::string_view kExternal = "external";
}  // namespace arch

struct PlanStep {
  std::string tool;
  nlohmann::json params = nlohmann::json::object();
  int layer = 0;      // HTAM only; 0 otherwise
  std::string agent;  // HTAM only
};

// One backend round trip, kept for auditing.
struct Exchange {
  std::string stage;
  std::string prompt;
  std::string response;
};

struct Plan {
  std::string architecture;
  std::vector<PlanStep> steps;          // catalog tools only
  std::vector<std::string> quarantined; // non-catalog names the planner emitted
  std::vector<Exchange> trace;
  std::vector<std::string> flags;

  // Tool names the metrics see.
  ToolPath metric_path() const;
  bool has_flag(std::string_view flag) const;

  static Plan from_tools(std::string architecture, const ToolPath& tools);
  nlohmann::json to_json(bool include_trace = false) const;
};

struct Choice {
  std::string agent;
  std::string subtask;
};

struct Selection {
  int layer = 0;
  std::vector<Choice> chosen;
};

struct DebateSchedule {
  int openings = 1;
  int free_rounds = 2;
  int judges = 1;
};

struct PlannerOptions {
  DecodingParams decoding;
  std::string model;
  // Per-layer cap on selected sub-agents; see default_max_agents().
  std::map<int, int> max_agents;
  int react_max_steps = 10;
  int debaters = 3;
  DebateSchedule schedule;
};

// 1 for the top layer, 2 for layer 1, 3 otherwise.
int default_max_agents(int layer, int layer_count);

// One manager decision: which sub-agents of `layer` act, given the choices
// already made for layers layer+1..L (ordered top-down). Unregistered or
// wrong-layer names are dropped and the list is truncated to the cap.
Selection select_layer(std::string_view query, int layer, const std::vector<Selection>& higher,
                       const Registry& registry, CompletionBackend& backend,
                       const PlannerOptions& options = {}, std::vector<Exchange>* trace = nullptr);

// Top-down selection for layers L..1, then one scoped tool call per chosen
// sub-agent, assembled in layer order 1..L.
Plan plan_htam(std::string_view query, const Registry& registry, CompletionBackend& backend,
               const PlannerOptions& options = {});

Plan plan_cot(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
              const PlannerOptions& options = {});

// Thought, action, imagined observation per step. Never throws on transport
// errors; the partial plan is returned with a flag.
Plan plan_react(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                const PlannerOptions& options = {});

Plan plan_plan_execute(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                       const PlannerOptions& options = {});

// Issues debaters * (1 + free_rounds) + 1 calls.
Plan plan_debate(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                 const PlannerOptions& options = {});

// Dispatch by architecture label; baselines plan over registry.catalog().
Plan run_planner(std::string_view architecture, std::string_view query, const Registry& registry,
                 CompletionBackend& backend, const PlannerOptions& options = {});

bool is_planner_architecture(std::string_view architecture);

}  // namespace htam
