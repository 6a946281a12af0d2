#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "htam/graph.hpp"

namespace htam {

using ScoreMap = std::map<std::string, double, std::less<>>;

// outdeg(v) / max outdeg; all zero when no node has outgoing edges.
ScoreMap out_degree_centrality(const DependencyGraph& graph);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;
  int max_iter = 200;
  // Optional per-edge weights; missing edges default to 1.
  std::optional<std::map<Edge, double>> edge_weights;
};

struct PageRankResult {
  ScoreMap scores;
  int iterations = 0;
  bool converged = false;
};

// Power iteration over the graph as given. Dangling mass is spread uniformly.
// Cycles are tolerated here; dangling edge endpoints are not.
PageRankResult pagerank_centrality(const DependencyGraph& graph, const PageRankOptions& options = {});

struct CentralityScores {
  ScoreMap odc;
  ScoreMap prc;
  double damping = 0.85;
  int iterations_used = 0;
};

CentralityScores compute_centrality(const DependencyGraph& graph, const PageRankOptions& options = {});

struct CostModelParams {
  double base_cost = 1.0;
  double alpha = 1.0;
  bool uniform_mode = false;
};

// Insertion/deletion cost table plus the importance-analysis columns.
class CostModel {
 public:
  CostModel() = default;

  double base_cost() const { return base_cost_; }
  double alpha() const { return alpha_; }
  bool uniform_mode() const { return uniform_mode_; }

  // Unknown tools cost base_cost.
  double ins_del_cost(std::string_view tool) const;
  double insertion_cost(std::string_view tool) const { return ins_del_cost(tool); }
  double deletion_cost(std::string_view tool) const { return ins_del_cost(tool); }

  const ScoreMap& ins_del_table() const { return ins_del_; }
  const ScoreMap& odct() const { return odct_; }
  const ScoreMap& prct() const { return prct_; }
  const ScoreMap& ci() const { return ci_; }
  const ScoreMap& cc() const { return cc_; }

  static CostModel uniform(double base_cost = 1.0);

 private:
  friend CostModel build_cost_model(const CentralityScores&, const CostModelParams&);

  double base_cost_ = 1.0;
  double alpha_ = 1.0;
  bool uniform_mode_ = true;
  ScoreMap ins_del_;
  ScoreMap odct_;
  ScoreMap prct_;
  ScoreMap ci_;
  ScoreMap cc_;
};

CostModel build_cost_model(const CentralityScores& scores, const CostModelParams& params = {});

}  // namespace htam
