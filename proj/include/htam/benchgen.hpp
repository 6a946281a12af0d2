#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htam/backend.hpp"
#include "htam/catalog.hpp"
#include "htam/embedding.hpp"
#include "htam/graph.hpp"
#include "htam/task.hpp"
#include "json.hpp"

namespace htam {

// Domain labels, descriptions and lower-cased relevance keywords.
struct DomainTable {
  std::vector<std::string> domains;
  std::map<std::string, std::string> descriptions;
  std::map<std::string, std::vector<std::string>> keywords;

  static DomainTable from_json(const nlohmann::json& j);
  static DomainTable bundled();
};

struct ComplexityBand {
  std::size_t min_len = 0;
  std::size_t max_len = 0;  // inclusive
};

using ComplexityBands = std::map<std::string, ComplexityBand>;

ComplexityBands default_complexity_bands();                       // 3-6, 6-10, 10-16
std::map<std::string, std::string> default_tools_number_ranges();  // "5-8", "8-12", "12-18"

enum class Stage { kComplexity, kRelevance, kDedup };
std::string_view to_string(Stage s);

struct ValidationOutcome {
  Stage stage = Stage::kComplexity;
  bool passed = false;
  std::string detail;
};

struct GenerationOptions {
  DecodingParams decoding;
  std::string model;
};

// Asks for a DAG template and validates it (acyclic, catalog tools only).
// An invalid answer is re-asked once with the violations appended.
// Throws Error(kInvalidTemplate).
DependencyGraph generate_dependency_template(const std::string& domain, const std::string& complexity,
                                             const ToolCatalog& catalog, CompletionBackend& backend,
                                             const DomainTable& domains = DomainTable::bundled(),
                                             const std::string& tools_number_range = {},
                                             const GenerationOptions& options = {});

// Per-tool parameter maps aligned with `path`. Parameters missing from the
// catalog schema are dropped and reported in `warnings`.
// Throws Error(kParameterizationMismatch).
std::vector<ParameterizedStep> parameterize_path(const ToolPath& path, const ToolCatalog& catalog,
                                                 CompletionBackend& backend, const GenerationOptions& options = {},
                                                 std::vector<std::string>* warnings = nullptr);

struct Question {
  std::string text;
  bool truncated = false;  // backend produced more than one sentence
};

// Reverse inference: a one-sentence question answered by the given steps.
// Throws Error(kEmptyQuestion).
Question formulate_question(const std::vector<ParameterizedStep>& steps, CompletionBackend& backend,
                            const GenerationOptions& options = {});

// Reduces backend output to its first sentence, without quotes or markup.
Question normalize_question(std::string_view raw);

ValidationOutcome verify_complexity(const TaskRecord& task, const ComplexityBands& bands = default_complexity_bands());

using RelevanceClassifier = std::function<bool(const TaskRecord&)>;

// Case-insensitive substring hits of the task domain's keywords. The
// classifier, when given, runs after a keyword pass.
ValidationOutcome check_domain_relevance(const TaskRecord& task, const DomainTable& table, int min_hits = 1,
                                         const RelevanceClassifier& classifier = {});

struct DuplicatePair {
  std::string removed;
  std::string kept;
  double similarity = 0.0;
};

struct DedupResult {
  std::vector<TaskRecord> retained;
  std::vector<DuplicatePair> removed;
};

// Greedy scan in input order: a task is dropped when its question vector
// equals, or has cosine > threshold with, an already retained one.
// Throws Error(kProviderFailure) if embedding fails.
DedupResult deduplicate(const std::vector<TaskRecord>& tasks, EmbeddingProvider& embedder, double threshold = 0.90);

struct BenchConfig {
  std::vector<std::string> domains;       // empty: every bundled domain
  std::vector<std::string> complexities;  // empty: Simple, Medium, Complex
  int tasks_per_unit = 1;                 // quota per (domain, complexity)
  std::uint64_t seed = 0;
  ComplexityBands bands = default_complexity_bands();
  std::map<std::string, std::string> tools_number_ranges = default_tools_number_ranges();
  int min_keyword_hits = 1;
  double dedup_threshold = 0.90;
  PathLimits path_limits;
  int workers = 1;
  GenerationOptions generation;
  RelevanceClassifier classifier;
};

struct PipelineReport {
  std::size_t generated = 0;
  std::size_t removed_complexity = 0;
  std::size_t removed_relevance = 0;
  std::size_t removed_dedup = 0;
  std::size_t retained = 0;
  std::vector<std::string> failures;  // units or tasks that never produced a question
  std::vector<std::string> audit;     // e.g. truncated questions
  struct Removal {
    std::string task_id;
    Stage stage;
    std::string detail;
  };
  std::vector<Removal> removals;

  nlohmann::json to_json() const;
};

struct BenchResult {
  std::vector<TaskRecord> tasks;
  PipelineReport report;
};

// Template -> paths -> parameters -> question per (domain, complexity) unit,
// then complexity, relevance and dedup filters. Never aborts on a unit
// failure.
BenchResult build_benchmark(const BenchConfig& config, const ToolCatalog& catalog, CompletionBackend& backend,
                            EmbeddingProvider& embedder, const DomainTable& domains = DomainTable::bundled());

// Deterministic RFC 4122 version-4 formatted id from a seeded generator.
std::string seeded_uuid(std::uint64_t seed, std::uint64_t counter);

}  // namespace htam
