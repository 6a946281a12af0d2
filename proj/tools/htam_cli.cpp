// Command-line front end: plan, eval, bench gen, score, report.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "htam/benchgen.hpp"
#include "htam/embedding.hpp"
#include "htam/error.hpp"
#include "htam/harness.hpp"
#include "htam/parse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw htam::Error(htam::ErrorCode::kConfigError, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw htam::Error(htam::ErrorCode::kConfigError, "malformed JSON in " + path.string());
  return j;
}

// A tool list file is a JSON array, an object with a "tools" array, or one name per line.
htam::ToolPath read_tool_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw htam::Error(htam::ErrorCode::kConfigError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) {
    if (j.is_object() && j.contains("tools")) j = j["tools"];
    if (j.is_array()) return j.get<htam::ToolPath>();
  }
  htam::ToolPath out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string tok = htam::normalize_token(line);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct PlanArgs {
  std::string query;
  std::string architecture = "htam";
  std::string backend = "mock";
  std::string script;
  std::string registry;
  std::string catalog;
  bool as_json = false;
};

int cmd_plan(const PlanArgs& a) {
  json bj = {{"kind", a.backend}};
  if (!a.script.empty()) bj["script"] = a.script;
  auto backend = htam::make_backend(htam::BackendConfig::from_json(bj, fs::current_path()));
  htam::ToolCatalog catalog = a.catalog.empty() ? htam::earthagent_catalog() : htam::ToolCatalog::load(a.catalog);
  htam::Registry registry = a.registry.empty() ? htam::earthagent_registry() : htam::Registry::load(a.registry, catalog);
  if (!htam::is_planner_architecture(a.architecture)) {
    throw htam::Error(htam::ErrorCode::kConfigError, "unknown architecture " + a.architecture);
  }
  htam::Plan plan = htam::run_planner(a.architecture, a.query, registry, *backend);
  if (a.as_json) {
    std::cout << plan.to_json(true).dump(2) << "\n";
  } else {
    for (const auto& t : plan.metric_path()) std::cout << t << "\n";
    for (const auto& f : plan.flags) std::cerr << "flag: " << f << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string config;
  std::string output_dir;
  int workers = 0;
};

int cmd_eval(const EvalArgs& a) {
  htam::RunConfig config = htam::RunConfig::load(a.config);
  if (!a.output_dir.empty()) config.output_dir = a.output_dir;
  if (a.workers > 0) config.workers = a.workers;
  if (config.output_dir.empty()) config.output_dir = "htam_out";
  htam::EvalReport report = htam::run_evaluation(config);
  for (const auto& f : config.formats) {
    switch (htam::parse_report_format(f)) {
      case htam::ReportFormat::kJson:
        htam::emit_report(report, htam::ReportFormat::kJson, config.output_dir / "report.json");
        break;
      case htam::ReportFormat::kMarkdown:
        htam::emit_report(report, htam::ReportFormat::kMarkdown, config.output_dir / "summary.md");
        break;
      case htam::ReportFormat::kCsv:
        htam::emit_report(report, htam::ReportFormat::kCsv, config.output_dir / "csv");
        break;
    }
  }
  std::cout << htam::render_markdown(report);
  return report.has_failures() ? kExitPartial : kExitOk;
}

struct BenchArgs {
  std::string config;
  std::string out = "tasks.jsonl";
  std::string report;
  std::string backend = "mock";
  std::string script;
  std::vector<std::string> domains;
  int per_unit = 0;
  std::int64_t seed = -1;
};

int cmd_bench_gen(const BenchArgs& a) {
  htam::BenchConfig cfg;
  json j = a.config.empty() ? json::object() : read_json_file(a.config);
  try {
    cfg.domains = j.value("domains", cfg.domains);
    cfg.complexities = j.value("complexities", cfg.complexities);
    cfg.tasks_per_unit = j.value("tasks_per_unit", cfg.tasks_per_unit);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.min_keyword_hits = j.value("min_keyword_hits", cfg.min_keyword_hits);
    cfg.dedup_threshold = j.value("dedup_threshold", cfg.dedup_threshold);
    cfg.workers = j.value("workers", cfg.workers);
    const json bands = j.value("bands", json::object());
    for (const auto& [level, band] : bands.items()) {
      cfg.bands[level] = {band.at(0).get<std::size_t>(), band.at(1).get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw htam::Error(htam::ErrorCode::kConfigError, std::string("bench config: ") + e.what());
  }
  if (!a.domains.empty()) cfg.domains = a.domains;
  if (a.per_unit > 0) cfg.tasks_per_unit = a.per_unit;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (cfg.tasks_per_unit < 1) throw htam::Error(htam::ErrorCode::kConfigError, "tasks_per_unit must be >= 1");
  if (!(cfg.dedup_threshold > 0.0 && cfg.dedup_threshold <= 1.0)) {
    throw htam::Error(htam::ErrorCode::kConfigError, "dedup_threshold must be in (0,1]");
  }

  json bj = j.value("backend", json{{"kind", a.backend}});
  if (!a.script.empty()) bj["script"] = a.script;
  const fs::path base = a.config.empty() ? fs::current_path() : fs::path(a.config).parent_path();
  auto backend = htam::make_backend(htam::BackendConfig::from_json(bj, base));
  auto embedder = htam::make_default_embedder();
  htam::BenchResult result = htam::build_benchmark(cfg, htam::earthagent_catalog(), *backend, *embedder);
  htam::save_tasks(a.out, result.tasks);
  const std::string report = result.report.to_json().dump(2);
  if (a.report.empty()) {
    std::cout << report << "\n";
  } else {
    std::ofstream(a.report) << report << "\n";
  }
  return result.report.failures.empty() ? kExitOk : kExitPartial;
}

struct ScoreArgs {
  std::string agent;
  std::string ground_truth;
  std::string key_gt;
  std::string key_agent;
  std::string graph;
  std::string similarity = "lexical";
  double base_cost = 1.0;
  double alpha = 1.0;
  bool uniform = false;
};

int cmd_score(const ScoreArgs& a) {
  const htam::ToolPath agent = read_tool_list(a.agent);
  const htam::ToolPath gt = read_tool_list(a.ground_truth);
  const htam::ToolSet key_gt = a.key_gt.empty() ? htam::unique_tools(gt) : htam::unique_tools(read_tool_list(a.key_gt));
  const htam::ToolSet key_agent =
      a.key_agent.empty() ? htam::unique_tools(agent) : htam::unique_tools(read_tool_list(a.key_agent));
  htam::DependencyGraph graph = a.graph.empty() ? htam::earthagent_graph() : htam::DependencyGraph::load(a.graph);
  htam::CostModel costs = htam::build_cost_model(htam::compute_centrality(graph), {a.base_cost, a.alpha, a.uniform});

  std::unique_ptr<htam::SimilarityProvider> sim;
  if (a.similarity == "exact") {
    sim = std::make_unique<htam::ExactSimilarity>();
  } else if (a.similarity == "lexical") {
    sim = std::make_unique<htam::LexicalSimilarity>();
  } else {
    throw htam::Error(htam::ErrorCode::kConfigError, "score supports exact or lexical similarity");
  }
  auto c = htam::score_correctness(key_gt, key_agent, agent, gt);
  json out = {{"recall_key", c.recall},
              {"precision_key", c.precision},
              {"f1_key", c.f1},
              {"path_similarity", htam::path_similarity(agent, gt, costs, *sim)},
              {"edit_distance", htam::weighted_edit_distance(agent, gt, costs, *sim)},
              {"max_possible_cost", htam::max_possible_cost(agent, gt, costs)},
              {"flags", c.empty_key ? json::array({"empty_key"}) : json::array()}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string input;
  std::string format = "markdown";
  std::string group_by;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  htam::EvalReport report = htam::EvalReport::load(a.input);
  if (!a.group_by.empty()) {
    std::cout << "group,architecture,tasks,Recall_key,Precision_key,F1_key,Structural,Holistic\n";
    for (const auto& r : htam::summarize(report, htam::parse_group_by(a.group_by))) {
      std::cout << r.group << ',' << r.architecture << ',' << r.tasks << ',' << r.recall_key << ',' << r.precision_key
                << ',' << r.f1_key << ',' << r.structural << ',' << r.holistic << '\n';
    }
    return kExitOk;
  }
  const htam::ReportFormat format = htam::parse_report_format(a.format);
  if (a.out.empty()) {
    if (format == htam::ReportFormat::kCsv) {
      throw htam::Error(htam::ErrorCode::kConfigError, "csv output needs --out <directory>");
    }
    std::cout << (format == htam::ReportFormat::kJson ? report.to_json().dump(2) + "\n" : htam::render_markdown(report));
  } else {
    htam::emit_report(report, format, a.out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical tool-planning agents: planning, benchmark generation and evaluation"};
  app.require_subcommand(1);

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Plan one query and print its tool list");
  plan_cmd->add_option("query", plan.query, "Natural-language task")->required();
  plan_cmd->add_option("-a,--arch", plan.architecture, "htam | cot | react | plan_execute | debate");
  plan_cmd->add_option("--backend", plan.backend, "mock | scripted | http");
  plan_cmd->add_option("--script", plan.script, "Rule file for the scripted backend");
  plan_cmd->add_option("--catalog", plan.catalog, "Tool catalog JSON");
  plan_cmd->add_option("--registry", plan.registry, "Sub-agent registry JSON");
  plan_cmd->add_flag("--json", plan.as_json, "Print the full plan with its trace");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run a full evaluation from a config file");
  eval_cmd->add_option("-c,--config", eval.config, "Run config (JSON)")->required();
  eval_cmd->add_option("-o,--output-dir", eval.output_dir, "Override output_dir");
  eval_cmd->add_option("-w,--workers", eval.workers, "Override worker count");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark generation");
  bench_cmd->require_subcommand(1);
  auto* gen_cmd = bench_cmd->add_subcommand("gen", "Generate tasks by reverse inference");
  gen_cmd->add_option("-c,--config", bench.config, "Bench config (JSON)");
  gen_cmd->add_option("-o,--out", bench.out, "Output JSONL");
  gen_cmd->add_option("--report", bench.report, "Pipeline report path (default: stdout)");
  gen_cmd->add_option("--backend", bench.backend, "mock | scripted | http");
  gen_cmd->add_option("--script", bench.script, "Rule file for the scripted backend");
  gen_cmd->add_option("--domain", bench.domains, "Restrict to these domains");
  gen_cmd->add_option("--per-unit", bench.per_unit, "Tasks per (domain, complexity)");
  gen_cmd->add_option("--seed", bench.seed, "Seed");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score an agent tool list against a ground truth");
  score_cmd->add_option("agent", score.agent, "Agent tool list file")->required();
  score_cmd->add_option("ground_truth", score.ground_truth, "Ground-truth tool list file")->required();
  score_cmd->add_option("--key-gt", score.key_gt, "Key tools of the ground truth (default: all)");
  score_cmd->add_option("--key-agent", score.key_agent, "Key tools of the agent path (default: all)");
  score_cmd->add_option("--graph", score.graph, "Dependency graph for centrality weights");
  score_cmd->add_option("--similarity", score.similarity, "exact | lexical");
  score_cmd->add_option("--base-cost", score.base_cost, "Base insertion/deletion cost");
  score_cmd->add_option("--alpha", score.alpha, "PageRank weight");
  score_cmd->add_flag("--uniform", score.uniform, "Unit costs");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Re-summarize a saved report");
  report_cmd->add_option("input", report.input, "report.json")->required();
  report_cmd->add_option("-f,--format", report.format, "json | csv | markdown");
  report_cmd->add_option("-g,--group-by", report.group_by, "complexity | domain | overall (prints CSV)");
  report_cmd->add_option("-o,--out", report.out, "Output file (directory for csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*plan_cmd) return cmd_plan(plan);
    if (*eval_cmd) return cmd_eval(eval);
    if (*gen_cmd) return cmd_bench_gen(bench);
    if (*score_cmd) return cmd_score(score);
    if (*report_cmd) return cmd_report(report);
  } catch (const htam::Error& e) {
    std::cerr << "htam: " << e.what() << "\n";
    return e.code() == htam::ErrorCode::kConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "htam: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
