#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "htam/backend.hpp"
#include "htam/centrality.hpp"
#include "htam/embedding.hpp"
#include "htam/graph.hpp"
#include "htam/task.hpp"

namespace htam {

using ToolSet = std::set<std::string>;

ToolSet unique_tools(const ToolPath& path);

// |key_gt ∩ set(agent)| / |key_gt|. Throws Error(kEmptyKeySet).
double key_recall(const ToolSet& key_gt, const ToolPath& agent_path);

struct PrecisionResult {
  double score = 0.0;
  bool empty_key = false;
};

// |key_agent ∩ set(gt)| / |key_agent|; an empty key set scores 0 with a flag.
PrecisionResult key_precision(const ToolSet& key_agent, const ToolPath& gt_path);

double f1(double recall, double precision);

struct CorrectnessScores {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  bool empty_key = false;
};

CorrectnessScores score_correctness(const ToolSet& key_gt, const ToolSet& key_agent, const ToolPath& agent_path,
                                    const ToolPath& gt_path);

// Symmetric similarity in [0,1] with similarity(a, a) = 1.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(std::string_view a, std::string_view b) const = 0;
};

class ExactSimilarity : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) const override { return a == b ? 1.0 : 0.0; }
};

// 1 for equal names, else Jaccard over underscore-separated name tokens.
double lexical_similarity(std::string_view a, std::string_view b);

class LexicalSimilarity : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) const override { return lexical_similarity(a, b); }
};

// Cosine of embedded "name: description" texts, clamped to [0,1]. Vectors are
// memoized; safe for concurrent use.
class EmbeddingSimilarity : public SimilarityProvider {
 public:
  EmbeddingSimilarity(EmbedderPtr embedder, std::map<std::string, std::string, std::less<>> descriptions = {});
  double similarity(std::string_view a, std::string_view b) const override;

 private:
  const Vector& vector_of(std::string_view tool) const;

  EmbedderPtr embedder_;
  std::map<std::string, std::string, std::less<>> descriptions_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, Vector, std::less<>> cache_;
};

// Centrality-weighted Levenshtein distance. Substitution costs
// 1 - similarity; an exact match costs 0.
double weighted_edit_distance(const ToolPath& agent, const ToolPath& gt, const CostModel& costs,
                              const SimilarityProvider& sim);

// Delete-all plus insert-all cost, at least base_cost.
double max_possible_cost(const ToolPath& agent, const ToolPath& gt, const CostModel& costs);

// 1 - D / MaxPossibleCost. Throws Error(kBothEmpty).
double path_similarity(const ToolPath& agent, const ToolPath& gt, const CostModel& costs,
                       const SimilarityProvider& sim);

struct KeySets {
  ToolSet key_gt;
  ToolSet key_agent;
  std::string provenance;
  std::vector<std::string> flags;
};

// Memo for judge key-set extraction keyed by (task, kind, path).
class KeySetCache {
 public:
  bool lookup(const std::string& key, ToolSet& out) const;
  void store(const std::string& key, const ToolSet& value);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, ToolSet> entries_;
};

struct KeyExtractionOptions {
  DecodingParams decoding;
  std::string model;
  std::string provenance = "judge";
  KeySetCache* cache = nullptr;
};

// Two judge prompts (key steps of the ground truth, key tools of the agent
// path). Results are clamped to the source path; an empty answer is re-asked
// once and then replaced by the full deduplicated path. A task carrying
// key_steps skips the first call. Throws Error(kJudgeProtocolError).
KeySets extract_key_sets(CompletionBackend& judge, const TaskRecord& task, const ToolPath& agent_path,
                         const KeyExtractionOptions& options = {});

}  // namespace htam
