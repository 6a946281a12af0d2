#include "htam/planner.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "htam/error.hpp"
#include "htam/parse.hpp"
#include "htam/prompts.hpp"

namespace htam {

using nlohmann::json;

ToolPath Plan::metric_path() const {
  ToolPath path;
  path.reserve(steps.size());
  for (const auto& s : steps) path.push_back(s.tool);
  return path;
}

bool Plan::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Plan Plan::from_tools(std::string architecture, const ToolPath& tools) {
  Plan p;
  p.architecture = std::move(architecture);
  for (const auto& t : tools) p.steps.push_back({t});
  return p;
}

json Plan::to_json(bool include_trace) const {
  json steps_j = json::array();
  for (const auto& s : steps) {
    json sj = {{"tool", s.tool}, {"params", s.params}};
    if (s.layer > 0) {
      sj["layer"] = s.layer;
      sj["agent"] = s.agent;
    }
    steps_j.push_back(std::move(sj));
  }
  json j = {{"architecture", architecture},
            {"tools", metric_path()},
            {"steps", steps_j},
            {"quarantined", quarantined},
            {"flags", flags}};
  if (include_trace) {
    json t = json::array();
    for (const auto& e : trace) t.push_back({{"stage", e.stage}, {"prompt", e.prompt}, {"response", e.response}});
    j["trace"] = std::move(t);
  }
  return j;
}

namespace {

bool is_transport(ErrorCode c) {
  return c == ErrorCode::kTransport || c == ErrorCode::kProtocol || c == ErrorCode::kRateLimited ||
         c == ErrorCode::kProviderFailure;
}

// Sends one prompt and records the exchange. Backend failures surface as
// Error(kPlanningFailed).
std::string call(CompletionBackend& backend, const std::string& stage, const std::string& prompt,
                 const PlannerOptions& options, std::vector<Exchange>* trace) {
  std::string response;
  try {
    response = ask(backend, prompt, options.decoding, options.model);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPlanningFailed || is_transport(e.code())) {
      throw Error(ErrorCode::kPlanningFailed, stage + ": " + e.what());
    }
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kPlanningFailed, stage + ": " + e.what());
  }
  if (trace) trace->push_back({stage, prompt, response});
  return response;
}

std::string agents_info(const std::vector<const SubAgentSpec*>& agents) {
  std::string out;
  for (const auto* a : agents) out += "- " + a->name + ": " + a->description + "\n";
  return out;
}

std::string choices_inline(const Selection& s) {
  std::string out;
  for (std::size_t i = 0; i < s.chosen.size(); ++i) {
    if (i) out += "; ";
    out += s.chosen[i].agent + " (subtask: " + s.chosen[i].subtask + ")";
  }
  return out;
}

std::string str_field(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) return {};
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

std::vector<Choice> parse_choices(const std::string& response) {
  auto j = extract_json(response);
  if (!j) throw Error(ErrorCode::kUnparseableSelection, "no JSON selection in response");
  std::vector<Choice> out;
  auto add_items = [&](const json& arr) {
    for (const auto& item : arr) {
      if (item.is_string()) {
        out.push_back({normalize_token(item.get<std::string>()), {}});
      } else if (item.is_object()) {
        std::string name = str_field(item, {"name", "agent", "selected_agent"});
        if (!name.empty()) out.push_back({normalize_token(name), str_field(item, {"subtask", "task"})});
      }
    }
  };
  if (j->is_array()) {
    add_items(*j);
  } else if (j->is_object()) {
    if (auto it = j->find("selected_agents"); it != j->end() && it->is_array()) {
      add_items(*it);
    } else if (auto it2 = j->find("selected_agent"); it2 != j->end() && it2->is_string()) {
      out.push_back({normalize_token(it2->get<std::string>()), str_field(*j, {"subtask", "task"})});
    } else {
      throw Error(ErrorCode::kUnparseableSelection, "selection JSON lacks selected_agent(s)");
    }
  } else {
    throw Error(ErrorCode::kUnparseableSelection, "selection is neither object nor array");
  }
  return out;
}

std::string render_selection_prompt(std::string_view query, int layer, const std::vector<Selection>& higher,
                                    const Registry& registry, int cap) {
  const int L = registry.layers();
  const std::string info = agents_info(registry.agents_in_layer(layer));
  auto higher_for = [&](int l) -> const Selection& {
    return higher[static_cast<std::size_t>(L - l)];
  };
  if (L == 3) {
    if (layer == 3) return render_prompt("htam_layer3", {{"layer3_agents_info", info}, {"query", std::string(query)}});
    const Choice& top = higher_for(3).chosen.front();
    if (layer == 2) {
      return render_prompt("htam_layer2", {{"layer2_agents_info", info},
                                           {"query", std::string(query)},
                                           {"layer3_agent", top.agent},
                                           {"layer3_subtask", top.subtask}});
    }
    return render_prompt("htam_layer1", {{"layer1_agents_info", info},
                                         {"query", std::string(query)},
                                         {"layer2_info", choices_inline(higher_for(2))},
                                         {"layer3_agent", top.agent}});
  }
  const std::string layer_s = std::to_string(layer);
  if (layer == L) {
    return render_prompt("htam_generic_top", {{"layer", layer_s}, {"agents_info", info}, {"query", std::string(query)}});
  }
  std::string higher_info;
  for (const auto& s : higher) higher_info += "Layer " + std::to_string(s.layer) + ": " + choices_inline(s) + "\n";
  return render_prompt(layer == 1 ? "htam_generic_bottom" : "htam_generic_middle",
                       {{"layer", layer_s},
                        {"agents_info", info},
                        {"query", std::string(query)},
                        {"higher_info", higher_info},
                        {"max_agents", std::to_string(cap)}});
}

void add_step_or_quarantine(Plan& plan, const ToolCatalog& catalog, const std::string& name, json params = json::object()) {
  if (catalog.contains(name)) {
    plan.steps.push_back({name, params.is_object() ? std::move(params) : json::object()});
  } else {
    plan.quarantined.push_back(name);
  }
}

std::string join_names(const std::vector<std::string>& names) { return json(names).dump(); }

}  // namespace

int default_max_agents(int layer, int layer_count) {
  if (layer == layer_count) return 1;
  if (layer == 1) return 2;
  return 3;
}

Selection select_layer(std::string_view query, int layer, const std::vector<Selection>& higher,
                       const Registry& registry, CompletionBackend& backend, const PlannerOptions& options,
                       std::vector<Exchange>* trace) {
  const int L = registry.layers();
  if (layer < 1 || layer > L) throw Error(ErrorCode::kInvalidArgument, "layer out of range");
  if (static_cast<int>(higher.size()) != L - layer) {
    throw Error(ErrorCode::kInvalidArgument, "higher selections must cover layers above " + std::to_string(layer));
  }
  for (std::size_t i = 0; i < higher.size(); ++i) {
    if (higher[i].layer != L - static_cast<int>(i) || higher[i].chosen.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "higher selections must be non-empty and ordered top-down");
    }
  }
  int cap = default_max_agents(layer, L);
  if (auto it = options.max_agents.find(layer); it != options.max_agents.end()) cap = it->second;

  const std::string prompt = render_selection_prompt(query, layer, higher, registry, cap);
  const std::string response = call(backend, "select_layer_" + std::to_string(layer), prompt, options, trace);

  Selection sel{layer, {}};
  std::set<std::string> seen;
  for (auto& c : parse_choices(response)) {
    const SubAgentSpec* spec = registry.find(c.agent);
    if (!spec || spec->layer != layer || !seen.insert(spec->name).second) continue;
    if (static_cast<int>(sel.chosen.size()) >= cap) break;
    sel.chosen.push_back({spec->name, c.subtask.empty() ? std::string(query) : c.subtask});
  }
  if (sel.chosen.empty()) {
    throw Error(ErrorCode::kEmptySelection, "no registered layer-" + std::to_string(layer) + " agent selected");
  }
  return sel;
}

Plan plan_htam(std::string_view query, const Registry& registry, CompletionBackend& backend,
               const PlannerOptions& options) {
  Plan plan;
  plan.architecture = std::string(arch::kHtam);
  const int L = registry.layers();
  std::vector<Selection> selections;  // layers L..1
  for (int l = L; l >= 1; --l) {
    selections.push_back(select_layer(query, l, selections, registry, backend, options, &plan.trace));
  }
  for (int l = 1; l <= L; ++l) {
    const Selection& sel = selections[static_cast<std::size_t>(L - l)];
    for (const auto& choice : sel.chosen) {
      const SubAgentSpec& agent = *registry.find(choice.agent);
      const ToolCatalog scoped = registry.tools_of(agent);
      const std::string prompt = render_prompt("htam_subagent_tools", {{"agent_name", agent.name},
                                                                       {"layer", std::to_string(l)},
                                                                       {"agent_description", agent.description},
                                                                       {"query", std::string(query)},
                                                                       {"subtask", choice.subtask},
                                                                       {"tools_info", scoped.render_for_prompt()}});
      const std::string response = call(backend, "tools_" + agent.name, prompt, options, &plan.trace);
      ToolList list;
      try {
        list = parse_tool_list(response, scoped);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoListFound) throw;
        plan.flags.push_back("subagent_unparseable:" + agent.name);
        continue;
      }
      for (auto& t : list.tools) plan.steps.push_back({std::move(t), json::object(), l, agent.name});
      for (auto& r : list.rejects) plan.quarantined.push_back(std::move(r));
    }
  }
  if (plan.steps.empty()) plan.flags.push_back("empty_plan");
  return plan;
}

Plan plan_cot(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
              const PlannerOptions& options) {
  Plan plan;
  plan.architecture = std::string(arch::kCot);
  const std::string prompt =
      render_prompt("cot", {{"query", std::string(query)}, {"tools_info", catalog.render_for_prompt()}});
  const std::string response = call(backend, "cot", prompt, options, &plan.trace);

  static const std::regex kStep(R"(^\s*\**\s*step\s*\d+\s*\**\s*:\s*(.*)$)", std::regex::icase);
  std::istringstream lines(response);
  std::string line;
  bool any = false;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, kStep)) continue;
    any = true;
    std::string body = m[1].str();
    std::size_t semi = body.rfind(';');
    std::string name = normalize_token(semi == std::string::npos ? body : body.substr(semi + 1));
    if (name.empty()) continue;
    add_step_or_quarantine(plan, catalog, name);
  }
  if (!any) throw Error(ErrorCode::kUnparseableSelection, "no stepN lines in chain-of-thought output");
  if (plan.steps.empty()) plan.flags.push_back("empty_plan");
  return plan;
}

Plan plan_react(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                const PlannerOptions& options) {
  if (options.react_max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "react_max_steps must be >= 1");
  Plan plan;
  plan.architecture = std::string(arch::kReact);
  const std::string tools_info = catalog.render_for_prompt();
  const std::string system = render_prompt("react_system", {});
  const std::string protocol = render_prompt("react_action_protocol", {{"tools_info", tools_info}});
  std::string history;
  json previous = json::array();
  bool finished = false;

  try {
    for (int step = 1; step <= options.react_max_steps; ++step) {
      const std::string tag = std::to_string(step);
      const std::string thought =
          call(backend, "thought_" + tag,
               render_prompt("react_thought", {{"system_prompt", system},
                                               {"tools_info", tools_info},
                                               {"query", std::string(query)},
                                               {"history", history.empty() ? "(none)" : history},
                                               {"previous_tool_calls", previous.dump()}}),
               options, &plan.trace);
      const std::string action =
          call(backend, "action_" + tag,
               render_prompt("react_action", {{"query", std::string(query)},
                                              {"thought", thought},
                                              {"history", history.empty() ? "(none)" : history},
                                              {"previous_tool_calls", previous.dump()}}) +
                   protocol,
               options, &plan.trace);

      auto j = extract_json(action);
      std::string tool = j ? str_field(*j, {"tool", "name", "function"}) : std::string{};
      if (tool.empty()) {
        if (normalize_token(action) != "FINISH" && action.find("FINISH") == std::string::npos) {
          plan.flags.push_back("action_unparseable");
        }
        if (step == 1) plan.flags.push_back("finished_without_action");
        finished = true;
        break;
      }
      tool = normalize_token(tool);
      json params = json::object();
      if (j->is_object()) {
        for (const char* k : {"parameters", "arguments", "args", "params"}) {
          if (auto it = j->find(k); it != j->end() && it->is_object()) {
            params = *it;
            break;
          }
        }
      }
      const ToolSpec* spec = catalog.find(tool);
      add_step_or_quarantine(plan, catalog, tool, params);
      const std::string observation =
          call(backend, "observation_" + tag,
               render_prompt("react_observation", {{"thought", thought},
                                                   {"tool_name", tool},
                                                   {"tool_description", spec ? spec->description : "(unknown tool)"},
                                                   {"args", params.dump()}}),
               options, &plan.trace);
      previous.push_back({{"tool", tool}, {"parameters", params}});
      history += "Step " + tag + ":\n" + normalize_token(thought) + "\nAction: " + tool + " " + params.dump() +
                 "\nObservation: " + observation + "\n";
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPlanningFailed) throw;
    plan.flags.push_back("transport_error");
    finished = true;
  }
  if (!finished) plan.flags.push_back("max_steps_reached");
  return plan;
}

Plan plan_plan_execute(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                       const PlannerOptions& options) {
  Plan plan;
  plan.architecture = std::string(arch::kPlanExecute);
  const std::string prompt =
      render_prompt("plan_execute", {{"tools_info", catalog.render_for_prompt()}, {"query", std::string(query)}});
  const std::string response = call(backend, "plan", prompt, options, &plan.trace);
  auto j = extract_json(response);
  if (!j) throw Error(ErrorCode::kUnparseableSelection, "no JSON plan in response");
  const json* steps = nullptr;
  if (j->is_object()) {
    if (auto it = j->find("plan"); it != j->end() && it->is_array()) steps = &*it;
  } else if (j->is_array()) {
    steps = &*j;
  }
  if (!steps) throw Error(ErrorCode::kUnparseableSelection, "JSON lacks a plan array");
  for (const auto& s : *steps) {
    std::string name;
    json params = json::object();
    if (s.is_string()) {
      name = s.get<std::string>();
    } else if (s.is_object()) {
      name = str_field(s, {"tool", "name", "tool_name"});
      for (const char* k : {"parameters", "params", "arguments"}) {
        if (auto it = s.find(k); it != s.end() && it->is_object()) {
          params = *it;
          break;
        }
      }
    }
    name = normalize_token(name);
    if (name.empty()) throw Error(ErrorCode::kUnparseableSelection, "plan step without a tool name");
    add_step_or_quarantine(plan, catalog, name, params);
  }
  if (plan.steps.empty()) plan.flags.push_back("empty_plan");
  return plan;
}

Plan plan_debate(std::string_view query, const ToolCatalog& catalog, CompletionBackend& backend,
                 const PlannerOptions& options) {
  const auto& sched = options.schedule;
  if (options.debaters < 2) throw Error(ErrorCode::kInvalidArgument, "debate needs at least 2 debaters");
  if (sched.openings != 1 || sched.judges != 1 || sched.free_rounds < 0) {
    throw Error(ErrorCode::kInvalidArgument, "schedule must be (1 opening, k >= 0 free rounds, 1 judge)");
  }
  Plan plan;
  plan.architecture = std::string(arch::kDebate);
  const std::string tools_info = catalog.render_for_prompt();
  const std::size_t m = static_cast<std::size_t>(options.debaters);
  std::vector<std::vector<std::string>> answers(m);
  std::string history;

  for (std::size_t i = 0; i < m; ++i) {
    const std::string response =
        call(backend, "opening_" + std::to_string(i + 1),
             render_prompt("debate_opening", {{"question", std::string(query)}, {"tools_info", tools_info}}), options,
             &plan.trace);
    try {
      answers[i] = parse_name_list(response);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoListFound) throw;
      plan.flags.push_back("debater_unparseable:" + std::to_string(i + 1) + ":round0");
    }
  }
  auto log_round = [&](int round) {
    for (std::size_t i = 0; i < m; ++i) {
      history += "Round " + std::to_string(round) + " debater " + std::to_string(i + 1) + ": " +
                 join_names(answers[i]) + "\n";
    }
  };
  log_round(0);

  for (int r = 1; r <= sched.free_rounds; ++r) {
    const std::string snapshot = history;
    std::vector<std::vector<std::string>> next = answers;
    for (std::size_t i = 0; i < m; ++i) {
      const std::string response =
          call(backend, "round_" + std::to_string(r) + "_" + std::to_string(i + 1),
               render_prompt("debate_round", {{"debater_index", std::to_string(i + 1)},
                                              {"question", std::string(query)},
                                              {"former_response", join_names(answers[i])},
                                              {"tools_info", tools_info},
                                              {"history_str", snapshot}}),
               options, &plan.trace);
      try {
        next[i] = parse_name_list(response);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoListFound) throw;
        plan.flags.push_back("debater_unparseable:" + std::to_string(i + 1) + ":round" + std::to_string(r));
      }
    }
    answers = std::move(next);
    log_round(r);
  }

  const std::string verdict =
      call(backend, "judge",
           render_prompt("debate_judge",
                         {{"question", std::string(query)}, {"tools_info", tools_info}, {"history_str", history}}),
           options, &plan.trace);
  std::vector<std::string> final_names;
  try {
    final_names = parse_name_list(verdict);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoListFound) throw;
    throw Error(ErrorCode::kUnparseableSelection, "judge output holds no final_tool_trajectory");
  }
  for (const auto& n : final_names) add_step_or_quarantine(plan, catalog, n);
  if (plan.steps.empty()) plan.flags.push_back("empty_plan");
  return plan;
}

bool is_planner_architecture(std::string_view a) {
  return a == arch::kHtam || a == arch::kCot || a == arch::kReact || a == arch::kPlanExecute || a == arch::kDebate;
}

Plan run_planner(std::string_view architecture, std::string_view query, const Registry& registry,
                 CompletionBackend& backend, const PlannerOptions& options) {
  if (architecture == arch::kHtam) return plan_htam(query, registry, backend, options);
  if (architecture == arch::kCot) return plan_cot(query, registry.catalog(), backend, options);
  if (architecture == arch::kReact) return plan_react(query, registry.catalog(), backend, options);
  if (architecture == arch::kPlanExecute) return plan_plan_execute(query, registry.catalog(), backend, options);
  if (architecture == arch::kDebate) return plan_debate(query, registry.catalog(), backend, options);
  throw Error(ErrorCode::kInvalidArgument, "unknown planner architecture " + std::string(architecture));
}

}  // namespace htam
