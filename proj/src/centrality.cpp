#include "htam/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "htam/error.hpp"

namespace htam {

ScoreMap out_degree_centrality(const DependencyGraph& graph) {
  ScoreMap degree;
  double max_degree = 0.0;
  for (const auto& n : graph.nodes) {
    auto d = static_cast<double>(graph.out_degree(n));
    degree[n] = d;
    max_degree = std::max(max_degree, d);
  }
  for (auto& [n, d] : degree) d = max_degree > 0.0 ? d / max_degree : 0.0;
  return degree;
}

PageRankResult pagerank_centrality(const DependencyGraph& graph, const PageRankOptions& options) {
  if (!(options.damping > 0.0 && options.damping < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "damping must lie in (0,1)");
  }
  for (const auto& [from, to] : graph.edges) {
    if (!graph.nodes.contains(from) || !graph.nodes.contains(to)) {
      throw Error(ErrorCode::kInvalidGraph, "edge endpoint outside node set: " + from + "->" + to);
    }
  }

  PageRankResult result;
  const std::size_t n = graph.nodes.size();
  if (n == 0) {
    result.converged = true;
    return result;
  }

  std::vector<std::string> names(graph.nodes.begin(), graph.nodes.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;

  struct Link {
    std::size_t from;
    std::size_t to;
    double weight;
  };
  std::vector<Link> links;
  std::vector<double> out_weight(n, 0.0);
  for (const auto& e : graph.edges) {
    double w = 1.0;
    if (options.edge_weights) {
      if (auto it = options.edge_weights->find(e); it != options.edge_weights->end()) w = it->second;
    }
    if (w < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative edge weight");
    links.push_back({index[e.first], index[e.second], w});
    out_weight[index[e.first]] += w;
  }

  const double d = options.damping;
  const double teleport = (1.0 - d) / static_cast<double>(n);
  std::vector<double> rank(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out_weight[i] <= 0.0) dangling += rank[i];
    }
    std::fill(next.begin(), next.end(), teleport + d * dangling / static_cast<double>(n));
    for (const auto& l : links) {
      if (out_weight[l.from] > 0.0) next[l.to] += d * rank[l.from] * l.weight / out_weight[l.from];
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - rank[i]);
    rank.swap(next);
    result.iterations = iter;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }

  // Renormalize away accumulated rounding so the scores sum to one.
  double total = 0.0;
  for (double r : rank) total += r;
  for (std::size_t i = 0; i < n; ++i) result.scores[names[i]] = rank[i] / total;
  return result;
}

CentralityScores compute_centrality(const DependencyGraph& graph, const PageRankOptions& options) {
  auto pr = pagerank_centrality(graph, options);
  CentralityScores out;
  out.odc = out_degree_centrality(graph);
  out.prc = std::move(pr.scores);
  out.damping = options.damping;
  out.iterations_used = pr.iterations;
  return out;
}

double CostModel::ins_del_cost(std::string_view tool) const {
  if (uniform_mode_) return base_cost_;
  auto it = ins_del_.find(tool);
  return it == ins_del_.end() ? base_cost_ : it->second;
}

CostModel CostModel::uniform(double base_cost) {
  if (!(base_cost > 0.0)) throw Error(ErrorCode::kNegativeBase, "base cost must be positive");
  CostModel m;
  m.base_cost_ = base_cost;
  m.uniform_mode_ = true;
  return m;
}

CostModel build_cost_model(const CentralityScores& scores, const CostModelParams& params) {
  if (!(params.base_cost > 0.0)) throw Error(ErrorCode::kNegativeBase, "base cost must be positive");
  if (params.alpha < 0.0) throw Error(ErrorCode::kInvalidArgument, "alpha must be nonnegative");

  CostModel m;
  m.base_cost_ = params.base_cost;
  m.alpha_ = params.alpha;
  m.uniform_mode_ = params.uniform_mode;

  auto lookup = [](const ScoreMap& map, const std::string& key) {
    auto it = map.find(key);
    return it == map.end() ? 0.0 : it->second;
  };
  std::set<std::string> tools;
  for (const auto& [k, v] : scores.odc) tools.insert(k);
  for (const auto& [k, v] : scores.prc) tools.insert(k);

  const double base = params.base_cost;
  for (const auto& tool : tools) {
    const double odc = lookup(scores.odc, tool);
    const double prc = lookup(scores.prc, tool);
    m.ins_del_[tool] = params.uniform_mode ? base : base * (1.0 + (odc + params.alpha * prc) / 2.0);
    m.odct_[tool] = base * (1.0 + odc);
    m.prct_[tool] = base * (1.0 + params.alpha * prc);
    m.ci_[tool] = (odc + prc) / 2.0;
    m.cc_[tool] = (m.odct_[tool] + m.prct_[tool]) / 2.0;
  }
  return m;
}

}  // namespace htam
