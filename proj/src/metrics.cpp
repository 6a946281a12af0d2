#include "htam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htam/error.hpp"
#include "htam/parse.hpp"
#include "htam/prompts.hpp"

namespace htam {

ToolSet unique_tools(const ToolPath& path) { return ToolSet(path.begin(), path.end()); }

namespace {

std::size_t intersection_size(const ToolSet& a, const ToolSet& b) {
  std::size_t n = 0;
  for (const auto& x : a) n += b.count(x);
  return n;
}

std::vector<std::string> split_underscore(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('_', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

double key_recall(const ToolSet& key_gt, const ToolPath& agent_path) {
  if (key_gt.empty()) throw Error(ErrorCode::kEmptyKeySet, "ground-truth key set is empty");
  return static_cast<double>(intersection_size(key_gt, unique_tools(agent_path))) /
         static_cast<double>(key_gt.size());
}

PrecisionResult key_precision(const ToolSet& key_agent, const ToolPath& gt_path) {
  if (key_agent.empty()) return {0.0, true};
  return {static_cast<double>(intersection_size(key_agent, unique_tools(gt_path))) /
              static_cast<double>(key_agent.size()),
          false};
}

double f1(double recall, double precision) {
  const double s = recall + precision;
  return s > 0.0 ? 2.0 * recall * precision / s : 0.0;
}

CorrectnessScores score_correctness(const ToolSet& key_gt, const ToolSet& key_agent, const ToolPath& agent_path,
                                    const ToolPath& gt_path) {
  CorrectnessScores s;
  s.recall = key_recall(key_gt, agent_path);
  auto p = key_precision(key_agent, gt_path);
  s.precision = p.score;
  s.empty_key = p.empty_key;
  s.f1 = f1(s.recall, s.precision);
  return s;
}

double lexical_similarity(std::string_view a, std::string_view b) {
  if (a == b) return 1.0;
  auto ta = split_underscore(a);
  auto tb = split_underscore(b);
  ToolSet sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  std::size_t inter = intersection_size(sa, sb);
  std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

EmbeddingSimilarity::EmbeddingSimilarity(EmbedderPtr embedder,
                                         std::map<std::string, std::string, std::less<>> descriptions)
    : embedder_(std::move(embedder)), descriptions_(std::move(descriptions)) {
  if (!embedder_) throw Error(ErrorCode::kInvalidArgument, "EmbeddingSimilarity needs an embedder");
}

const Vector& EmbeddingSimilarity::vector_of(std::string_view tool) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(tool); it != cache_.end()) return it->second;
  }
  std::string text(tool);
  if (auto it = descriptions_.find(tool); it != descriptions_.end()) text += ": " + it->second;
  std::vector<std::string> batch{text};
  auto vecs = embedder_->embed(batch);
  if (vecs.size() != 1) throw Error(ErrorCode::kProviderFailure, "embedder returned wrong batch size");
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(std::string(tool), std::move(vecs.front())).first->second;
}

double EmbeddingSimilarity::similarity(std::string_view a, std::string_view b) const {
  if (a == b) return 1.0;
  // Order the pair so floating-point evaluation is symmetric.
  if (b < a) std::swap(a, b);
  const double c = cosine_similarity(vector_of(a), vector_of(b));
  return std::clamp(c, 0.0, 1.0);
}

double weighted_edit_distance(const ToolPath& agent, const ToolPath& gt, const CostModel& costs,
                              const SimilarityProvider& sim) {
  const std::size_t m = agent.size(), n = gt.size();
  std::vector<double> del(m), ins(n);
  for (std::size_t i = 0; i < m; ++i) del[i] = costs.deletion_cost(agent[i]);
  for (std::size_t j = 0; j < n; ++j) ins[j] = costs.insertion_cost(gt[j]);

  std::vector<double> prev(n + 1), cur(n + 1);
  prev[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) prev[j] = prev[j - 1] + ins[j - 1];
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = prev[0] + del[i - 1];
    for (std::size_t j = 1; j <= n; ++j) {
      const double diag = agent[i - 1] == gt[j - 1] ? 0.0 : 1.0 - sim.similarity(agent[i - 1], gt[j - 1]);
      cur[j] = std::min({prev[j] + del[i - 1], cur[j - 1] + ins[j - 1], prev[j - 1] + diag});
    }
    std::swap(prev, cur);
  }
  return std::max(0.0, prev[n]);
}

double max_possible_cost(const ToolPath& agent, const ToolPath& gt, const CostModel& costs) {
  double total = 0.0;
  for (const auto& a : agent) total += costs.deletion_cost(a);
  for (const auto& g : gt) total += costs.insertion_cost(g);
  return std::max(total, costs.base_cost());
}

double path_similarity(const ToolPath& agent, const ToolPath& gt, const CostModel& costs,
                       const SimilarityProvider& sim) {
  if (agent.empty() && gt.empty()) throw Error(ErrorCode::kBothEmpty, "both paths are empty");
  const double d = weighted_edit_distance(agent, gt, costs, sim);
  if (d == 0.0) return 1.0;
  return std::clamp(1.0 - d / max_possible_cost(agent, gt, costs), 0.0, 1.0);
}

bool KeySetCache::lookup(const std::string& key, ToolSet& out) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  out = it->second;
  return true;
}

void KeySetCache::store(const std::string& key, const ToolSet& value) {
  std::lock_guard lock(mutex_);
  entries_.emplace(key, value);
}

namespace {

ToolSet ask_key_set(CompletionBackend& judge, const std::string& prompt, const ToolPath& source,
                    const KeyExtractionOptions& options, const std::string& label, std::vector<std::string>& flags) {
  const ToolSet allowed = unique_tools(source);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string response;
    try {
      response = ask(judge, prompt, options.decoding, options.model);
    } catch (const Error& e) {
      throw Error(ErrorCode::kJudgeProtocolError, label + " judge call failed: " + e.what());
    }
    std::vector<std::string> names;
    try {
      names = parse_name_list(response);
    } catch (const Error&) {
      throw Error(ErrorCode::kJudgeProtocolError, label + " judge output holds no list");
    }
    ToolSet out;
    for (const auto& n : names) {
      if (allowed.count(n)) out.insert(n);
    }
    if (!out.empty()) return out;
  }
  flags.push_back(label + "_fallback");
  return allowed;
}

}  // namespace

KeySets extract_key_sets(CompletionBackend& judge, const TaskRecord& task, const ToolPath& agent_path,
                         const KeyExtractionOptions& options) {
  KeySets ks;
  ks.provenance = options.provenance;
  const ToolSet gt_tools = unique_tools(task.ground_truth);
  if (gt_tools.empty()) throw Error(ErrorCode::kEmptyKeySet, "task " + task.task_id + " has no ground truth");

  const std::string gt_json = nlohmann::json(task.ground_truth).dump();
  const std::string gt_key = task.task_id + "|key_gt|" + gt_json;
  if (task.key_steps) {
    for (const auto& s : *task.key_steps) {
      if (gt_tools.count(s)) ks.key_gt.insert(s);
    }
  }
  if (ks.key_gt.empty() && !(options.cache && options.cache->lookup(gt_key, ks.key_gt))) {
    ks.key_gt = ask_key_set(
        judge,
        render_prompt("key_steps_extraction", {{"question", task.question}, {"ground_truth_tool_flow", gt_json}}),
        task.ground_truth, options, "key_gt", ks.flags);
    if (options.cache) options.cache->store(gt_key, ks.key_gt);
  }

  if (agent_path.empty()) return ks;
  const std::string agent_json = nlohmann::json(agent_path).dump();
  const std::string agent_key = task.task_id + "|key_agent|" + agent_json;
  if (!(options.cache && options.cache->lookup(agent_key, ks.key_agent))) {
    ks.key_agent = ask_key_set(
        judge, render_prompt("key_tools_extraction", {{"question", task.question}, {"agent_tool_flow", agent_json}}),
        agent_path, options, "key_agent", ks.flags);
    if (options.cache) options.cache->store(agent_key, ks.key_agent);
  }
  return ks;
}

}  // namespace htam
