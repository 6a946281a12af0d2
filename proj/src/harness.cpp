#include "htam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "htam/embedding.hpp"
#include "htam/error.hpp"
#include "htam/http_backend.hpp"
#include "htam/mock.hpp"

namespace htam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return fs::absolute(path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfigError, msg); }

void require_file(const fs::path& p, const std::string& what) {
  if (!p.empty() && !fs::exists(p)) config_error(what + " not found: " + p.string());
}

std::string iso_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

// Runs fn(i) for i in [0, n) on `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

BackendConfig BackendConfig::from_json(const json& j, const fs::path& base_dir) {
  BackendConfig c;
  if (j.is_string()) {
    c.kind = j.get<std::string>();
  } else if (j.is_object()) {
    c.kind = j.value("kind", c.kind);
    c.script = resolve(base_dir, j.value("script", std::string{}));
    c.cache = resolve(base_dir, j.value("cache", std::string{}));
    c.api_base = j.value("api_base", std::string{});
    c.model = j.value("model", std::string{});
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.react_repeat = j.value("react_repeat", false);
  } else if (!j.is_null()) {
    config_error("backend must be a string or object");
  }
  if (c.kind != "mock" && c.kind != "scripted" && c.kind != "http") config_error("unknown backend kind " + c.kind);
  if (c.kind == "scripted") {
    if (c.script.empty()) config_error("scripted backend needs \"script\"");
    require_file(c.script, "backend script");
  }
  if (c.max_in_flight < 1) config_error("max_in_flight must be >= 1");
  return c;
}

json BackendConfig::to_json() const {
  json j = {{"kind", kind}};
  if (!script.empty()) j["script"] = script.string();
  if (!cache.empty()) j["cache"] = cache.string();
  if (!api_base.empty()) j["api_base"] = api_base;
  if (!model.empty()) j["model"] = model;
  if (kind == "http") j["max_in_flight"] = max_in_flight;
  if (react_repeat) j["react_repeat"] = true;
  return j;
}

BackendPtr make_backend(const BackendConfig& config) {
  BackendPtr b;
  if (config.kind == "mock") {
    b = std::make_shared<KeywordRoutingBackend>(MockOptions{config.react_repeat});
  } else if (config.kind == "scripted") {
    b = ScriptedBackend::load(config.script);
  } else {
    HttpClientOptions opts = HttpClientOptions::from_env();
    if (!config.api_base.empty()) opts.api_base = config.api_base;
    if (!config.model.empty()) opts.model = config.model;
    opts.max_in_flight = config.max_in_flight;
    if (opts.api_base.empty()) config_error("http backend needs api_base or HTAM_API_BASE");
    b = std::make_shared<HttpChatBackend>(opts);
  }
  return config.cache.empty() ? b : cache_wrap(b, config.cache);
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  RunConfig c;
  try {
    c.tasks_path = resolve(base_dir, j.at("tasks_path").get<std::string>());
    c.catalog_path = resolve(base_dir, j.value("catalog_path", std::string{}));
    c.graph_path = resolve(base_dir, j.value("graph_path", std::string{}));
    c.registry_path = resolve(base_dir, j.value("registry_path", std::string{}));
    c.architectures = j.at("architectures").get<std::vector<std::string>>();
    const json ext = j.value("external_plans", json::object());
    for (const auto& [label, p] : ext.items()) {
      c.external_plans[label] = resolve(base_dir, p.get<std::string>());
    }
    c.backend = BackendConfig::from_json(j.value("backend", json("mock")), base_dir);
    if (j.contains("judge")) c.judge = BackendConfig::from_json(j["judge"], base_dir);

    const json m = j.value("metrics", json::object());
    c.metrics.base_cost = m.value("base_cost", c.metrics.base_cost);
    c.metrics.alpha = m.value("alpha", c.metrics.alpha);
    c.metrics.damping = m.value("damping", c.metrics.damping);
    c.metrics.uniform_mode = m.value("uniform_mode", c.metrics.uniform_mode);
    c.metrics.similarity = m.value("similarity", c.metrics.similarity);
    c.metrics.k = m.value("k", c.metrics.k);
    c.metrics.initial_rating = m.value("initial_rating", c.metrics.initial_rating);
    c.metrics.dedup_threshold = m.value("dedup_threshold", c.metrics.dedup_threshold);
    if (m.contains("order_seed") && !m["order_seed"].is_null()) c.metrics.order_seed = m["order_seed"].get<std::uint64_t>();

    const json p = j.value("planner", json::object());
    c.planner.react_max_steps = p.value("react_max_steps", c.planner.react_max_steps);
    c.planner.debaters = p.value("debaters", c.planner.debaters);
    c.planner.schedule.free_rounds = p.value("free_rounds", c.planner.schedule.free_rounds);
    c.planner.decoding.temperature = p.value("temperature", c.planner.decoding.temperature);
    c.planner.decoding.max_tokens = p.value("max_tokens", c.planner.decoding.max_tokens);
    const json caps = p.value("max_agents", json::object());
    for (const auto& [layer, cap] : caps.items()) {
      c.planner.max_agents[std::stoi(layer)] = cap.get<int>();
    }
    c.planner.model = c.backend.model;

    c.workers = j.value("workers", 1);
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string{}));
    if (j.contains("formats")) c.formats = j["formats"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    config_error(std::string("config: ") + e.what());
  } catch (const std::invalid_argument&) {
    config_error("config: max_agents keys must be layer numbers");
  }

  require_file(c.tasks_path, "tasks file");
  require_file(c.catalog_path, "catalog file");
  require_file(c.graph_path, "graph file");
  require_file(c.registry_path, "registry file");
  for (const auto& [label, p] : c.external_plans) require_file(p, "external plans for " + label);
  if (c.architectures.empty() && c.external_plans.empty()) config_error("architectures must be non-empty");
  for (const auto& a : c.architectures) {
    if (!is_planner_architecture(a) && !c.external_plans.count(a)) {
      config_error("architecture " + a + " is neither a planner nor an external_plans label");
    }
  }
  if (c.workers < 1) config_error("workers must be >= 1");
  if (c.metrics.base_cost <= 0.0) config_error("base_cost must be positive");
  if (c.metrics.alpha < 0.0) config_error("alpha must be nonnegative");
  if (!(c.metrics.damping > 0.0 && c.metrics.damping < 1.0)) config_error("damping must be in (0,1)");
  if (c.metrics.similarity != "exact" && c.metrics.similarity != "lexical" && c.metrics.similarity != "embedding") {
    config_error("similarity must be exact, lexical or embedding");
  }
  for (const auto& f : c.formats) {
    try {
      parse_report_format(f);
    } catch (const Error&) {
      config_error("unknown report format " + f);
    }
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) config_error("malformed JSON in " + path.string());
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json ext = json::object();
  for (const auto& [label, p] : external_plans) ext[label] = p.string();
  json max_agents = json::object();
  for (const auto& [l, cap] : planner.max_agents) max_agents[std::to_string(l)] = cap;
  json j = {{"tasks_path", tasks_path.string()},
            {"catalog_path", catalog_path.string()},
            {"graph_path", graph_path.string()},
            {"registry_path", registry_path.string()},
            {"architectures", architectures},
            {"external_plans", ext},
            {"backend", backend.to_json()},
            {"metrics",
             {{"base_cost", metrics.base_cost},
              {"alpha", metrics.alpha},
              {"damping", metrics.damping},
              {"uniform_mode", metrics.uniform_mode},
              {"similarity", metrics.similarity},
              {"k", metrics.k},
              {"initial_rating", metrics.initial_rating},
              {"dedup_threshold", metrics.dedup_threshold},
              {"order_seed", metrics.order_seed ? json(*metrics.order_seed) : json(nullptr)}}},
            {"planner",
             {{"react_max_steps", planner.react_max_steps},
              {"debaters", planner.debaters},
              {"free_rounds", planner.schedule.free_rounds},
              {"temperature", planner.decoding.temperature},
              {"max_tokens", planner.decoding.max_tokens},
              {"max_agents", max_agents}}},
            {"workers", workers},
            {"seed", seed},
            {"output_dir", output_dir.string()},
            {"formats", formats}};
  if (judge) j["judge"] = judge->to_json();
  return j;
}

std::vector<std::string> RunConfig::labels() const {
  std::vector<std::string> out = architectures;
  for (const auto& [label, _] : external_plans) {
    if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(label);
  }
  return out;
}

std::map<std::string, ToolPath> load_external_plans(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::map<std::string, ToolPath> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("task_id") || !j.contains("tools")) {
      throw Error(ErrorCode::kConfigError, "bad external plan line in " + path.string());
    }
    out[j["task_id"].get<std::string>()] = j["tools"].get<ToolPath>();
  }
  return out;
}

EvalContext make_context(const RunConfig& config) {
  EvalContext ctx;
  ctx.tasks = load_tasks(config.tasks_path);
  std::set<std::string> ids;
  for (const auto& t : ctx.tasks) {
    try {
      t.validate();
    } catch (const Error& e) {
      config_error(e.what());
    }
    if (!ids.insert(t.task_id).second) config_error("duplicate task_id " + t.task_id);
  }
  ToolCatalog catalog = config.catalog_path.empty() ? earthagent_catalog() : ToolCatalog::load(config.catalog_path);
  if (!config.registry_path.empty()) {
    ctx.registry = Registry::load(config.registry_path, catalog);
  } else if (!config.catalog_path.empty()) {
    ctx.registry = Registry::from_json(earthagent_registry().to_json(), catalog);
  } else {
    ctx.registry = earthagent_registry();
  }
  ctx.graph = config.graph_path.empty() ? earthagent_graph() : DependencyGraph::load(config.graph_path);
  ctx.planner = make_backend(config.backend);
  ctx.judge = config.judge ? make_backend(*config.judge) : ctx.planner;
  if (config.metrics.similarity == "exact") {
    ctx.similarity = std::make_shared<ExactSimilarity>();
  } else if (config.metrics.similarity == "lexical") {
    ctx.similarity = std::make_shared<LexicalSimilarity>();
  } else {
    std::map<std::string, std::string, std::less<>> desc;
    for (const auto& t : catalog.tools()) desc[t.name] = t.description;
    ctx.similarity = std::make_shared<EmbeddingSimilarity>(make_default_embedder(), std::move(desc));
  }
  for (const auto& [label, p] : config.external_plans) ctx.external[label] = load_external_plans(p);
  return ctx;
}

json MetricRecord::to_json() const {
  return {{"task_id", task_id},
          {"architecture", architecture},
          {"domain", domain},
          {"complexity", complexity},
          {"recall_key", recall_key},
          {"precision_key", precision_key},
          {"f1_key", f1_key},
          {"path_similarity", path_similarity},
          {"flags", flags},
          {"tools", tools}};
}

MetricRecord MetricRecord::from_json(const json& j) {
  MetricRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.architecture = j.at("architecture").get<std::string>();
  r.domain = j.value("domain", std::string{});
  r.complexity = j.value("complexity", std::string{});
  r.recall_key = j.at("recall_key").get<double>();
  r.precision_key = j.at("precision_key").get<double>();
  r.f1_key = j.at("f1_key").get<double>();
  r.path_similarity = j.at("path_similarity").get<double>();
  r.flags = j.value("flags", std::vector<std::string>{});
  r.tools = j.value("tools", ToolPath{});
  return r;
}

std::vector<ToolUsage> tool_usage_stats(const std::vector<ToolPath>& plans) {
  std::map<std::string, std::pair<std::size_t, double>> acc;
  for (const auto& plan : plans) {
    const std::size_t n = plan.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double pos = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
      auto& [count, sum] = acc[plan[i]];
      ++count;
      sum += pos;
    }
  }
  std::vector<ToolUsage> out;
  for (const auto& [tool, cs] : acc) out.push_back({tool, cs.first, cs.second / static_cast<double>(cs.first)});
  std::stable_sort(out.begin(), out.end(), [](const ToolUsage& a, const ToolUsage& b) {
    return a.frequency != b.frequency ? a.frequency > b.frequency : a.tool < b.tool;
  });
  return out;
}

EvalReport run_evaluation(const RunConfig& config, EvalContext& ctx) {
  const std::string started = iso_now();
  const std::vector<std::string> labels = config.labels();
  PageRankOptions pr;
  pr.damping = config.metrics.damping;
  const CostModel costs =
      build_cost_model(compute_centrality(ctx.graph, pr),
                       {config.metrics.base_cost, config.metrics.alpha, config.metrics.uniform_mode});
  PlannerOptions popts = config.planner;
  KeySetCache key_cache;
  KeyExtractionOptions kopts{popts.decoding, popts.model,
                             config.judge ? config.judge->kind : config.backend.kind, &key_cache};

  const std::size_t n = ctx.tasks.size();
  std::vector<std::vector<MetricRecord>> rows(n, std::vector<MetricRecord>(labels.size()));

  parallel_for(n, config.workers, [&](std::size_t i) {
    const TaskRecord& task = ctx.tasks[i];
    for (std::size_t a = 0; a < labels.size(); ++a) {
      const std::string& label = labels[a];
      MetricRecord& rec = rows[i][a];
      rec.task_id = task.task_id;
      rec.architecture = label;
      rec.domain = task.domain;
      rec.complexity = task.complexity;

      Plan plan;
      plan.architecture = label;
      if (auto ext = ctx.external.find(label); ext != ctx.external.end()) {
        if (auto p = ext->second.find(task.task_id); p != ext->second.end()) {
          plan = Plan::from_tools(label, p->second);
        } else {
          plan.flags.push_back("missing_external_plan");
        }
      } else {
        try {
          plan = run_planner(label, task.question, ctx.registry, *ctx.planner, popts);
        } catch (const Error& e) {
          plan.flags.push_back("planning_failed");
          plan.flags.push_back("error:" + std::string(to_string(e.code())));
        } catch (const std::exception&) {
          plan.flags.push_back("planning_failed");
        }
      }
      rec.tools = plan.metric_path();
      rec.flags = plan.flags;
      if (!plan.quarantined.empty()) rec.flags.push_back("quarantined:" + std::to_string(plan.quarantined.size()));

      KeySets ks;
      try {
        ks = extract_key_sets(*ctx.judge, task, rec.tools, kopts);
      } catch (const Error&) {
        rec.flags.push_back("judge_error");
        ks.key_gt = unique_tools(task.ground_truth);
        ks.key_agent = unique_tools(rec.tools);
      }
      for (const auto& f : ks.flags) rec.flags.push_back(f);
      auto c = score_correctness(ks.key_gt, ks.key_agent, rec.tools, task.ground_truth);
      if (c.empty_key) rec.flags.push_back("empty_key");
      rec.recall_key = c.recall;
      rec.precision_key = c.precision;
      rec.f1_key = c.f1;
      rec.path_similarity = path_similarity(rec.tools, task.ground_truth, costs, *ctx.similarity);
    }
  });

  EvalReport report;
  report.architectures = labels;
  for (auto& per_task : rows) {
    for (auto& r : per_task) report.per_task.push_back(std::move(r));
  }

  PlanTable table;
  std::vector<TournamentTask> ttasks;
  std::map<std::string, std::string> complexity_of;
  for (const auto& t : ctx.tasks) {
    ttasks.push_back({t.task_id, t.question});
    complexity_of[t.task_id] = t.complexity;
  }
  for (const auto& r : report.per_task) table[r.architecture][r.task_id] = r.tools;
  TournamentOptions topts;
  topts.k = config.metrics.k;
  topts.initial = config.metrics.initial_rating;
  topts.order_seed = config.metrics.order_seed;
  topts.fetch_workers = config.workers;
  topts.decoding = popts.decoding;
  topts.model = popts.model;
  auto records = collect_verdicts(schedule_battles(ttasks, labels, topts.order_seed), ttasks, table, *ctx.judge, topts);
  EloState overall = apply_verdicts(records, labels, topts);
  report.elo = overall.ratings;
  report.battles = overall.history;
  std::set<std::string> levels;
  for (const auto& t : ctx.tasks) levels.insert(t.complexity);
  for (const auto& level : levels) {
    std::vector<VerdictRecord> subset;
    for (const auto& r : records) {
      if (complexity_of[r.matchup.task_id] == level) subset.push_back(r);
    }
    report.elo_by_complexity[level] = apply_verdicts(subset, labels, topts).ratings;
  }

  for (const auto& label : labels) {
    std::vector<ToolPath> plans;
    for (const auto& r : report.per_task) {
      if (r.architecture == label) plans.push_back(r.tools);
    }
    report.usage[label] = tool_usage_stats(plans);
  }

  Usage pu = ctx.planner->usage();
  report.provenance = {
      {"config", config.to_json()},
      {"notes",
       {"Overall rows are task-weighted means of per-task rows.",
        "Holistic is the final Elo rating; complexity blocks replay the same verdicts in independent tournaments.",
        "Failed plans are scored as empty plans and flagged."}},
      {"backend_usage", {{"calls", pu.calls}, {"prompt_tokens", pu.prompt_tokens}, {"completion_tokens", pu.completion_tokens}}},
      {"timestamps", {{"started_at", started}, {"finished_at", iso_now()}}}};
  return report;
}

EvalReport run_evaluation(const RunConfig& config) {
  EvalContext ctx = make_context(config);
  return run_evaluation(config, ctx);
}

GroupBy parse_group_by(std::string_view s) {
  if (s == "complexity") return GroupBy::kComplexity;
  if (s == "domain") return GroupBy::kDomain;
  if (s == "overall") return GroupBy::kOverall;
  throw Error(ErrorCode::kInvalidArgument, "group_by must be complexity, domain or overall");
}

std::vector<SummaryRow> summarize(const EvalReport& report, GroupBy group_by) {
  auto key_of = [&](const MetricRecord& r) -> std::string {
    switch (group_by) {
      case GroupBy::kComplexity: return r.complexity;
      case GroupBy::kDomain: return r.domain;
      case GroupBy::kOverall: return "Overall";
    }
    return {};
  };
  std::vector<std::string> groups;
  if (group_by == GroupBy::kComplexity) {
    std::set<std::string> present;
    for (const auto& r : report.per_task) present.insert(r.complexity);
    for (const auto& level : complexity_levels()) {
      if (present.erase(level)) groups.push_back(level);
    }
    groups.insert(groups.end(), present.begin(), present.end());
  } else {
    std::set<std::string> present;
    for (const auto& r : report.per_task) present.insert(key_of(r));
    groups.assign(present.begin(), present.end());
  }

  std::vector<SummaryRow> out;
  for (const auto& g : groups) {
    for (const auto& arch : report.architectures) {
      SummaryRow row{g, arch};
      for (const auto& r : report.per_task) {
        if (r.architecture != arch || key_of(r) != g) continue;
        ++row.tasks;
        row.recall_key += r.recall_key;
        row.precision_key += r.precision_key;
        row.f1_key += r.f1_key;
        row.structural += r.path_similarity;
      }
      if (row.tasks == 0) continue;
      const double n = static_cast<double>(row.tasks);
      row.recall_key /= n;
      row.precision_key /= n;
      row.f1_key /= n;
      row.structural /= n;
      const std::map<std::string, double>* elo = &report.elo;
      if (group_by == GroupBy::kComplexity) {
        if (auto it = report.elo_by_complexity.find(g); it != report.elo_by_complexity.end()) elo = &it->second;
      }
      if (auto it = elo->find(arch); it != elo->end()) row.holistic = it->second;
      out.push_back(row);
    }
  }
  return out;
}

namespace {

json summary_json(const std::vector<SummaryRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"group", r.group},
                   {"architecture", r.architecture},
                   {"tasks", r.tasks},
                   {"Recall_key", r.recall_key},
                   {"Precision_key", r.precision_key},
                   {"F1_key", r.f1_key},
                   {"Structural", r.structural},
                   {"Holistic", r.holistic}});
  }
  return out;
}

const char* kGroupNames[] = {"complexity", "domain", "overall"};
const GroupBy kGroups[] = {GroupBy::kComplexity, GroupBy::kDomain, GroupBy::kOverall};

}  // namespace

json EvalReport::to_json() const {
  json rows = json::array();
  for (const auto& r : per_task) rows.push_back(r.to_json());
  json summary = json::object();
  for (int g = 0; g < 3; ++g) summary[kGroupNames[g]] = summary_json(summarize(*this, kGroups[g]));
  json battles_j = json::array();
  for (const auto& b : battles) battles_j.push_back(b.to_json());
  json usage_j = json::object();
  for (const auto& [arch, stats] : usage) {
    json list = json::array();
    for (const auto& u : stats) list.push_back({{"tool", u.tool}, {"frequency", u.frequency}, {"avg_position", u.avg_position}});
    usage_j[arch] = list;
  }
  return {{"architectures", architectures}, {"per_task", rows},       {"summary", summary},
          {"elo", elo},                     {"elo_by_complexity", elo_by_complexity},
          {"battles", battles_j},           {"usage", usage_j},       {"provenance", provenance}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.architectures = j.at("architectures").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_task")) r.per_task.push_back(MetricRecord::from_json(row));
    r.elo = j.value("elo", std::map<std::string, double>{});
    r.elo_by_complexity = j.value("elo_by_complexity", std::map<std::string, std::map<std::string, double>>{});
    const json battles_j = j.value("battles", json::array());
    for (const auto& b : battles_j) {
      Battle battle{b.at("task_id").get<std::string>(), b.at("a").get<std::string>(), b.at("b").get<std::string>(),
                    b.value("verdict", std::string{}),   b.value("r_a_after", 0.0),     b.value("r_b_after", 0.0),
                    b.value("skipped", false),           b.value("note", std::string{})};
      r.battles.push_back(std::move(battle));
    }
    const json usage_j = j.value("usage", json::object());
    for (const auto& [arch, list] : usage_j.items()) {
      auto& stats = r.usage[arch];
      for (const auto& u : list) {
        stats.push_back({u.at("tool").get<std::string>(), u.at("frequency").get<std::size_t>(),
                         u.at("avg_position").get<double>()});
      }
    }
    r.provenance = j.value("provenance", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("report JSON: ") + e.what());
  }
  if (j.contains("summary")) {
    static const char* kCols[] = {"Recall_key", "Precision_key", "F1_key", "Structural", "Holistic"};
    for (int g = 0; g < 3; ++g) {
      const json fresh = summary_json(summarize(r, kGroups[g]));
      const json& stored = j["summary"].value(kGroupNames[g], json::array());
      bool ok = fresh.size() == stored.size();
      for (std::size_t i = 0; ok && i < fresh.size(); ++i) {
        ok = fresh[i]["group"] == stored[i]["group"] && fresh[i]["architecture"] == stored[i]["architecture"];
        for (const char* col : kCols) {
          ok = ok && std::abs(fresh[i][col].get<double>() - stored[i][col].get<double>()) <= 1e-12;
        }
      }
      if (!ok) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("stored ") + kGroupNames[g] + " summary disagrees with per_task rows");
      }
    }
  }
  return r;
}

EvalReport EvalReport::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidArgument, "malformed JSON in " + path.string());
  return from_json(j);
}

bool EvalReport::has_failures() const {
  for (const auto& r : per_task) {
    for (const auto& f : r.flags) {
      if (f == "planning_failed" || f == "judge_error" || f == "missing_external_plan") return true;
    }
  }
  return std::any_of(battles.begin(), battles.end(), [](const Battle& b) { return b.skipped; });
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kInvalidArgument, "format must be json, csv or markdown");
}

std::string render_markdown(const EvalReport& report) {
  std::ostringstream md;
  auto table = [&](const std::string& first_col, const std::vector<SummaryRow>& rows) {
    md << "| " << first_col << " | Architecture | Tasks | Recall_key | Precision_key | F1_key | Structural | Holistic |\n";
    md << "|---|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
      md << "| " << r.group << " | " << r.architecture << " | " << r.tasks << " | " << fixed(r.recall_key, 4) << " | "
         << fixed(r.precision_key, 4) << " | " << fixed(r.f1_key, 4) << " | " << fixed(r.structural, 4) << " | "
         << fixed(r.holistic, 2) << " |\n";
    }
  };
  md << "# Evaluation summary\n\n";
  md << "## Results by complexity\n\n";
  auto by_cx = summarize(report, GroupBy::kComplexity);
  auto overall = summarize(report, GroupBy::kOverall);
  by_cx.insert(by_cx.end(), overall.begin(), overall.end());
  table("Complexity", by_cx);
  md << "\n## Results by domain\n\n";
  table("Domain", summarize(report, GroupBy::kDomain));
  md << "\n## Tool usage\n\n| Architecture | Tool | Frequency | Avg. position |\n|---|---|---:|---:|\n";
  for (const auto& arch : report.architectures) {
    auto it = report.usage.find(arch);
    if (it == report.usage.end()) continue;
    for (std::size_t i = 0; i < it->second.size() && i < 10; ++i) {
      const auto& u = it->second[i];
      md << "| " << arch << " | " << u.tool << " | " << u.frequency << " | " << fixed(u.avg_position, 3) << " |\n";
    }
  }
  std::size_t skipped = std::count_if(report.battles.begin(), report.battles.end(), [](const Battle& b) { return b.skipped; });
  md << "\nBattles: " << report.battles.size() << " (skipped " << skipped << ")\n";
  return md.str();
}

std::vector<fs::path> emit_report(const EvalReport& report, ReportFormat format, const fs::path& path) {
  std::vector<fs::path> written;
  if (format == ReportFormat::kJson) {
    write_file(path, report.to_json().dump(2) + "\n");
    written.push_back(path);
  } else if (format == ReportFormat::kMarkdown) {
    write_file(path, render_markdown(report));
    written.push_back(path);
  } else {
    std::ostringstream rows;
    rows << "task_id,architecture,domain,complexity,recall_key,precision_key,f1_key,path_similarity,flags,tools\n";
    for (const auto& r : report.per_task) {
      rows << csv_field(r.task_id) << ',' << csv_field(r.architecture) << ',' << csv_field(r.domain) << ','
           << csv_field(r.complexity) << ',' << num(r.recall_key) << ',' << num(r.precision_key) << ','
           << num(r.f1_key) << ',' << num(r.path_similarity) << ',' << csv_field(join(r.flags, ";")) << ','
           << csv_field(join(r.tools, " ")) << '\n';
    }
    written.push_back(path / "per_task.csv");
    write_file(written.back(), rows.str());

    for (int g = 0; g < 3; ++g) {
      std::ostringstream s;
      s << "group,architecture,tasks,Recall_key,Precision_key,F1_key,Structural,Holistic\n";
      for (const auto& r : summarize(report, kGroups[g])) {
        s << csv_field(r.group) << ',' << csv_field(r.architecture) << ',' << r.tasks << ',' << num(r.recall_key) << ','
          << num(r.precision_key) << ',' << num(r.f1_key) << ',' << num(r.structural) << ',' << num(r.holistic) << '\n';
      }
      written.push_back(path / (std::string("summary_") + kGroupNames[g] + ".csv"));
      write_file(written.back(), s.str());
    }

    std::ostringstream usage, positions;
    usage << "architecture,tool,frequency,avg_position\n";
    std::set<std::string> tools;
    for (const auto& arch : report.architectures) {
      auto it = report.usage.find(arch);
      if (it == report.usage.end()) continue;
      for (const auto& u : it->second) {
        usage << csv_field(arch) << ',' << csv_field(u.tool) << ',' << u.frequency << ',' << num(u.avg_position) << '\n';
        tools.insert(u.tool);
      }
    }
    positions << "tool";
    for (const auto& arch : report.architectures) positions << ',' << csv_field(arch);
    positions << '\n';
    for (const auto& tool : tools) {
      positions << csv_field(tool);
      for (const auto& arch : report.architectures) {
        positions << ',';
        auto it = report.usage.find(arch);
        if (it == report.usage.end()) continue;
        for (const auto& u : it->second) {
          if (u.tool == tool) positions << num(u.avg_position);
        }
      }
      positions << '\n';
    }
    written.push_back(path / "usage.csv");
    write_file(written.back(), usage.str());
    written.push_back(path / "positions.csv");
    write_file(written.back(), positions.str());

    std::ostringstream battles;
    battles << "task_id,a,b,verdict,r_a_after,r_b_after,skipped\n";
    for (const auto& b : report.battles) {
      battles << csv_field(b.task_id) << ',' << csv_field(b.a) << ',' << csv_field(b.b) << ',' << b.verdict << ','
              << num(b.r_a_after) << ',' << num(b.r_b_after) << ',' << (b.skipped ? "true" : "false") << '\n';
    }
    written.push_back(path / "battles.csv");
    write_file(written.back(), battles.str());
  }
  return written;
}

}  // namespace htam
