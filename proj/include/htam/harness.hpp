#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "htam/backend.hpp"
#include "htam/centrality.hpp"
#include "htam/elo.hpp"
#include "htam/metrics.hpp"
#include "htam/planner.hpp"
#include "htam/registry.hpp"
#include "htam/task.hpp"
#include "json.hpp"

namespace htam {

// How to build a completion backend from config:
//   {"kind": "mock", "react_repeat": false}
//   {"kind": "scripted", "script": "rules.json"}
//   {"kind": "http", "api_base": "...", "model": "...", "max_in_flight": 4}
// Any kind accepts "cache": "store.jsonl".
struct BackendConfig {
  std::string kind = "mock";
  std::filesystem::path script;
  std::filesystem::path cache;
  std::string api_base;
  std::string model;
  int max_in_flight = 4;
  bool react_repeat = false;

  static BackendConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;
};

BackendPtr make_backend(const BackendConfig& config);

struct MetricSettings {
  double base_cost = 1.0;
  double alpha = 1.0;
  double damping = 0.85;
  bool uniform_mode = false;
  std::string similarity = "lexical";  // exact | lexical | embedding
  double k = 32.0;
  double initial_rating = 1000.0;
  std::optional<std::uint64_t> order_seed;
  double dedup_threshold = 0.90;
};

struct RunConfig {
  std::filesystem::path tasks_path;
  std::filesystem::path catalog_path;   // empty: bundled EarthAgent catalog
  std::filesystem::path graph_path;     // empty: bundled master graph
  std::filesystem::path registry_path;  // empty: bundled EarthAgent registry
  std::vector<std::string> architectures;
  std::map<std::string, std::filesystem::path> external_plans;  // label -> JSONL {task_id, tools}
  BackendConfig backend;
  std::optional<BackendConfig> judge;  // defaults to `backend`
  MetricSettings metrics;
  PlannerOptions planner;
  int workers = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::vector<std::string> formats{"json", "markdown"};

  // Relative paths resolve against `base_dir`. Throws Error(kConfigError).
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // All labels scored: planners then external labels.
  std::vector<std::string> labels() const;
};

// Everything a run needs, resolved. Tests build this directly.
struct EvalContext {
  std::vector<TaskRecord> tasks;
  Registry registry;
  DependencyGraph graph;
  BackendPtr planner;
  BackendPtr judge;
  std::shared_ptr<SimilarityProvider> similarity;
  std::map<std::string, std::map<std::string, ToolPath>> external;  // label -> task -> path
};

EvalContext make_context(const RunConfig& config);
std::map<std::string, ToolPath> load_external_plans(const std::filesystem::path& path);

struct MetricRecord {
  std::string task_id;
  std::string architecture;
  std::string domain;
  std::string complexity;
  double recall_key = 0.0;
  double precision_key = 0.0;
  double f1_key = 0.0;
  double path_similarity = 0.0;
  std::vector<std::string> flags;
  ToolPath tools;

  nlohmann::json to_json() const;
  static MetricRecord from_json(const nlohmann::json& j);
};

struct ToolUsage {
  std::string tool;
  std::size_t frequency = 0;
  double avg_position = 0.0;
};

// Position of step i in an n-step plan is i/(n-1), 0 when n = 1; averaged over
// all occurrences. Sorted by frequency (desc), then name.
std::vector<ToolUsage> tool_usage_stats(const std::vector<ToolPath>& plans);

struct SummaryRow {
  std::string group;
  std::string architecture;
  std::size_t tasks = 0;
  double recall_key = 0.0;
  double precision_key = 0.0;
  double f1_key = 0.0;
  double structural = 0.0;
  double holistic = 0.0;
};

struct EvalReport {
  std::vector<std::string> architectures;
  std::vector<MetricRecord> per_task;
  std::map<std::string, double> elo;                                // overall tournament
  std::map<std::string, std::map<std::string, double>> elo_by_complexity;
  std::vector<Battle> battles;                                      // overall tournament log
  std::map<std::string, std::vector<ToolUsage>> usage;              // architecture -> stats
  nlohmann::json provenance;                                        // config snapshot, notes, timestamps

  nlohmann::json to_json() const;
  // Rejects reports whose aggregates disagree with per_task rows.
  static EvalReport from_json(const nlohmann::json& j);
  static EvalReport load(const std::filesystem::path& path);
  bool has_failures() const;
};

// Plans every task with every planner label, scores each plan, then runs the
// tournament. Per-task failures become flagged rows.
EvalReport run_evaluation(const RunConfig& config, EvalContext& context);
EvalReport run_evaluation(const RunConfig& config);

enum class GroupBy { kComplexity, kDomain, kOverall };
GroupBy parse_group_by(std::string_view s);

// Means of per-task rows per (group, architecture); Holistic is the Elo for
// that block (per-complexity tournament for complexity groups, the overall
// tournament otherwise). Empty groups are omitted.
std::vector<SummaryRow> summarize(const EvalReport& report, GroupBy group_by);

enum class ReportFormat { kJson, kCsv, kMarkdown };
ReportFormat parse_report_format(std::string_view s);

// json: <path> is the file. csv: <path> is a directory receiving per_task.csv,
// summary_<group>.csv, usage.csv, positions.csv, battles.csv. markdown: <path>
// is the file. Returns the files written; throws Error(kIoFailure).
std::vector<std::filesystem::path> emit_report(const EvalReport& report, ReportFormat format,
                                               const std::filesystem::path& path);

std::string render_markdown(const EvalReport& report);

}  // namespace htam
