#include "htam/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>

#include "htam/error.hpp"

namespace htam {

void DependencyGraph::add_edge(std::string from, std::string to) {
  nodes.insert(from);
  nodes.insert(to);
  edges.emplace(std::move(from), std::move(to));
}

std::vector<std::string> DependencyGraph::successors(const std::string& node) const {
  std::vector<std::string> out;
  for (auto it = edges.lower_bound({node, std::string()}); it != edges.end() && it->first == node; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> DependencyGraph::predecessors(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges) {
    if (to == node) out.push_back(from);
  }
  return out;
}

std::size_t DependencyGraph::out_degree(const std::string& node) const { return successors(node).size(); }

std::size_t DependencyGraph::in_degree(const std::string& node) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.second == node; }));
}

DependencyGraph DependencyGraph::from_json(const nlohmann::json& j) {
  DependencyGraph g;
  g.domain = j.value("domain", "");
  g.description = j.value("description", "");
  for (const auto& n : j.at("nodes")) g.nodes.insert(n.get<std::string>());
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw Error(ErrorCode::kInvalidGraph, "edge must be a [source, target] pair: " + e.dump());
    }
    g.edges.emplace(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return g;
}

DependencyGraph DependencyGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open graph " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

nlohmann::json DependencyGraph::to_json() const {
  auto edge_list = nlohmann::json::array();
  for (const auto& [from, to] : edges) edge_list.push_back({from, to});
  return {{"domain", domain}, {"nodes", nodes}, {"edges", edge_list}, {"description", description}};
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

namespace {

// One witness cycle (first closing back edge in sorted DFS order), ignoring
// self-loops and dangling endpoints.
std::vector<std::string> find_cycle(const DependencyGraph& g) {
  enum class Mark { kWhite, kGray, kBlack };
  std::map<std::string, Mark> mark;
  for (const auto& n : g.nodes) mark[n] = Mark::kWhite;

  std::vector<std::string> stack;
  std::vector<std::string> witness;

  std::function<bool(const std::string&)> visit = [&](const std::string& u) {
    mark[u] = Mark::kGray;
    stack.push_back(u);
    for (const auto& v : g.successors(u)) {
      if (v == u || !g.nodes.contains(v)) continue;
      if (mark[v] == Mark::kGray) {
        auto start = std::find(stack.begin(), stack.end(), v);
        witness.assign(start, stack.end());
        witness.push_back(v);
        return true;
      }
      if (mark[v] == Mark::kWhite && visit(v)) return true;
    }
    stack.pop_back();
    mark[u] = Mark::kBlack;
    return false;
  };

  for (const auto& n : g.nodes) {
    if (mark[n] == Mark::kWhite && visit(n)) break;
  }
  return witness;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

ValidationReport validate_dag(const DependencyGraph& graph) {
  ValidationReport report;
  std::set<std::string> dangling;
  for (const auto& [from, to] : graph.edges) {
    if (!graph.nodes.contains(from)) dangling.insert(from);
    if (!graph.nodes.contains(to)) dangling.insert(to);
    if (from == to) report.violations.push_back({ViolationKind::kSelfLoop, "self-loop: " + from});
  }
  for (const auto& d : dangling) {
    report.violations.push_back({ViolationKind::kDanglingEndpoint, "dangling endpoint " + d});
  }
  if (auto cycle = find_cycle(graph); !cycle.empty()) {
    report.violations.push_back({ViolationKind::kCycle, "cycle: " + join(cycle, ",")});
  }
  return report;
}

std::vector<std::string> LayerAssignment::layer(int index) const {
  std::vector<std::string> out;
  for (const auto& [node, l] : layer_of) {
    if (l == index) out.push_back(node);
  }
  return out;
}

namespace {

void require_valid(const DependencyGraph& graph) {
  if (auto report = validate_dag(graph); !report.ok()) {
    throw Error(ErrorCode::kCyclicGraph, report.summary());
  }
}

std::vector<std::string> topological_order(const DependencyGraph& graph) {
  std::map<std::string, std::size_t> indeg;
  for (const auto& n : graph.nodes) indeg[n] = 0;
  for (const auto& e : graph.edges) ++indeg[e.second];
  std::deque<std::string> ready;
  for (const auto& [n, d] : indeg) {
    if (d == 0) ready.push_back(n);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto u = ready.front();
    ready.pop_front();
    order.push_back(u);
    for (const auto& v : graph.successors(u)) {
      if (--indeg[v] == 0) ready.push_back(v);
    }
  }
  return order;
}

}  // namespace

LayerAssignment stratify_longest_path(const DependencyGraph& graph) {
  require_valid(graph);
  LayerAssignment out;
  for (const auto& u : topological_order(graph)) {
    int layer = 1;
    for (const auto& p : graph.predecessors(u)) layer = std::max(layer, out.layer_of.at(p) + 1);
    out.layer_of[u] = layer;
    out.layer_count = std::max(out.layer_count, layer);
  }
  return out;
}

LayerAssignment coarsen_layers(const LayerAssignment& assignment, const std::map<int, int>& merge_map) {
  int previous = 0;
  int coarse_max = 0;
  std::set<int> image;
  for (int fine = 1; fine <= assignment.layer_count; ++fine) {
    auto it = merge_map.find(fine);
    if (it == merge_map.end()) {
      throw Error(ErrorCode::kInvalidArgument, "merge map has no entry for layer " + std::to_string(fine));
    }
    if (it->second < previous) {
      throw Error(ErrorCode::kNonMonotoneMerge, "layer " + std::to_string(fine) + " maps to " +
                                                    std::to_string(it->second) + " below " +
                                                    std::to_string(previous));
    }
    if (it->second < 1) {
      throw Error(ErrorCode::kInvalidArgument, "coarse layers are 1-based");
    }
    previous = it->second;
    coarse_max = std::max(coarse_max, it->second);
    image.insert(it->second);
  }
  if (static_cast<int>(image.size()) != coarse_max) {
    throw Error(ErrorCode::kInvalidArgument, "merge map is not onto 1.." + std::to_string(coarse_max));
  }
  LayerAssignment out;
  out.layer_count = coarse_max;
  for (const auto& [node, fine] : assignment.layer_of) out.layer_of[node] = merge_map.at(fine);
  return out;
}

std::vector<Edge> check_stratification(const DependencyGraph& graph, const LayerAssignment& assignment) {
  for (const auto& n : graph.nodes) {
    if (!assignment.layer_of.contains(n)) throw Error(ErrorCode::kMissingNode, n);
  }
  std::vector<Edge> bad;
  for (const auto& e : graph.edges) {
    auto from = assignment.layer_of.find(e.first);
    auto to = assignment.layer_of.find(e.second);
    if (from == assignment.layer_of.end()) throw Error(ErrorCode::kMissingNode, e.first);
    if (to == assignment.layer_of.end()) throw Error(ErrorCode::kMissingNode, e.second);
    if (from->second > to->second) bad.push_back(e);
  }
  return bad;
}

std::vector<ToolPath> enumerate_paths(const DependencyGraph& graph, PathLimits limits) {
  require_valid(graph);
  std::vector<ToolPath> out;
  if (limits.max_paths == 0 || limits.max_len == 0) return out;

  ToolPath current;
  std::function<void(const std::string&)> walk = [&](const std::string& u) {
    if (out.size() >= limits.max_paths) return;
    current.push_back(u);
    auto next = graph.successors(u);
    if (next.empty()) {
      out.push_back(current);
    } else if (current.size() < limits.max_len) {
      for (const auto& v : next) walk(v);
    }
    current.pop_back();
  };

  for (const auto& n : graph.nodes) {
    if (graph.in_degree(n) == 0) walk(n);
  }
  return out;
}

bool is_graph_path(const DependencyGraph& graph, const ToolPath& path) {
  if (path.empty()) return false;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!graph.has_edge(path[i], path[i + 1])) return false;
  }
  return graph.nodes.contains(path.front());
}

}  // namespace htam
