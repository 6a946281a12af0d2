#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace htam {

using Edge = std::pair<std::string, std::string>;

// Tool-dependency graph. Construction does not enforce validity; use
// validate_dag() to get a report of what is wrong.
struct DependencyGraph {
  std::string domain;
  std::string description;
  std::set<std::string> nodes;
  std::set<Edge> edges;

  void add_node(std::string name) { nodes.insert(std::move(name)); }
  void add_edge(std::string from, std::string to);  // inserts both endpoints

  std::vector<std::string> successors(const std::string& node) const;
  std::vector<std::string> predecessors(const std::string& node) const;
  std::size_t out_degree(const std::string& node) const;
  std::size_t in_degree(const std::string& node) const;
  bool has_edge(const std::string& from, const std::string& to) const {
    return edges.contains({from, to});
  }

  static DependencyGraph from_json(const nlohmann::json& j);
  static DependencyGraph load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

enum class ViolationKind { kCycle, kDanglingEndpoint, kSelfLoop };

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_dag(const DependencyGraph& graph);

struct LayerAssignment {
  std::map<std::string, int> layer_of;  // 1-based
  int layer_count = 0;

  std::vector<std::string> layer(int index) const;  // members, sorted
};

// Longest-path layering: sources sit on layer 1, every edge strictly increases
// the layer. Throws Error(kCyclicGraph) on an invalid graph.
LayerAssignment stratify_longest_path(const DependencyGraph& graph);

// Relabels fine layers through `merge_map` (fine -> coarse). The map must be
// total over 1..L, nondecreasing, and onto 1..L'.
LayerAssignment coarsen_layers(const LayerAssignment& assignment,
                               const std::map<int, int>& merge_map);

// Edges with layer_of(source) > layer_of(target).
std::vector<Edge> check_stratification(const DependencyGraph& graph,
                                       const LayerAssignment& assignment);

using ToolPath = std::vector<std::string>;

struct PathLimits {
  std::size_t max_paths = 64;
  std::size_t max_len = 20;
};

// Simple source-to-sink paths in lexicographic depth-first order.
std::vector<ToolPath> enumerate_paths(const DependencyGraph& graph, PathLimits limits = {});

// True when every consecutive pair of `path` is an edge of `graph`.
bool is_graph_path(const DependencyGraph& graph, const ToolPath& path);

}  // namespace htam
