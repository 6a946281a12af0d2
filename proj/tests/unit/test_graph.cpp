#include "doctest.h"
#include "fixtures.hpp"
#include "htam/error.hpp"
#include "htam/graph.hpp"
#include "oracles.hpp"

using namespace htam;

namespace {

DependencyGraph chain() {
  DependencyGraph g;
  g.add_edge("a", "b");
  g.add_edge("b", "c");
  return g;
}

DependencyGraph diamond() {
  DependencyGraph g;
  g.add_edge("a", "b");
  g.add_edge("a", "c");
  g.add_edge("b", "d");
  g.add_edge("c", "d");
  return g;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("validate_dag") {
    CHECK(validate_dag(chain()).ok());

    DependencyGraph cyc;
    cyc.add_edge("a", "b");
    cyc.add_edge("b", "a");
    auto report = validate_dag(cyc);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::kCycle);
    CHECK(report.violations[0].message == "cycle: a,b,a");

    DependencyGraph dangling;
    dangling.add_node("a");
    dangling.edges.insert({"a", "z"});
    report = validate_dag(dangling);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].message == "dangling endpoint z");

    DependencyGraph self;
    self.add_edge("a", "a");
    CHECK_FALSE(validate_dag(self).ok());
  }

  TEST_CASE("json round trip") {
    auto g = DependencyGraph::load(fixture("graph12.json"));
    auto back = DependencyGraph::from_json(g.to_json());
    CHECK(back.nodes == g.nodes);
    CHECK(back.edges == g.edges);
  }

  TEST_CASE("stratify small cases") {
    auto s = stratify_longest_path(chain());
    CHECK(s.layer_count == 3);
    CHECK(s.layer_of.at("a") == 1);
    CHECK(s.layer_of.at("b") == 2);
    CHECK(s.layer_of.at("c") == 3);

    DependencyGraph v;
    v.add_edge("a", "c");
    v.add_edge("b", "c");
    s = stratify_longest_path(v);
    CHECK(s.layer_of.at("a") == 1);
    CHECK(s.layer_of.at("b") == 1);
    CHECK(s.layer_of.at("c") == 2);
    CHECK(s.layer(1) == std::vector<std::string>{"a", "b"});

    DependencyGraph cyc;
    cyc.add_edge("a", "b");
    cyc.add_edge("b", "a");
    CHECK(code_of([&] { stratify_longest_path(cyc); }) == ErrorCode::kCyclicGraph);
  }

  TEST_CASE("stratify 12-node fixture against brute-force longest paths") {
    auto g = DependencyGraph::load(fixture("graph12.json"));
    REQUIRE(g.nodes.size() == 12);
    auto s = stratify_longest_path(g);
    auto expected = oracle::longest_path_layers(g);
    CHECK(s.layer_of == expected);
    int top = 0;
    for (const auto& [_, l] : expected) top = std::max(top, l);
    CHECK(s.layer_count == top);
    CHECK(check_stratification(g, s).empty());
  }

  TEST_CASE("stratify random DAGs") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
      auto g = oracle::random_dag(rng, 1 + static_cast<int>(rng() % 12), 0.3);
      auto s = stratify_longest_path(g);
      CHECK(check_stratification(g, s).empty());
      for (const auto& [u, v] : g.edges) CHECK(s.layer_of.at(u) < s.layer_of.at(v));
      CHECK(s.layer_of == oracle::longest_path_layers(g));
    }
  }

  TEST_CASE("coarsen_layers") {
    LayerAssignment four;
    four.layer_of = {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}};
    four.layer_count = 4;
    auto c = coarsen_layers(four, {{1, 1}, {2, 2}, {3, 2}, {4, 3}});
    CHECK(c.layer_count == 3);
    CHECK(c.layer_of.at("c") == 2);
    CHECK(c.layer_of.at("d") == 3);

    auto same = coarsen_layers(four, {{1, 1}, {2, 2}, {3, 3}, {4, 4}});
    CHECK(same.layer_of == four.layer_of);
    CHECK(same.layer_count == 4);

    LayerAssignment two;
    two.layer_of = {{"a", 1}, {"b", 2}};
    two.layer_count = 2;
    CHECK(code_of([&] { coarsen_layers(two, {{1, 2}, {2, 1}}); }) == ErrorCode::kNonMonotoneMerge);
  }

  TEST_CASE("check_stratification reports backward edges") {
    LayerAssignment bad;
    bad.layer_of = {{"a", 2}, {"b", 1}, {"c", 3}};
    bad.layer_count = 3;
    auto v = check_stratification(chain(), bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == Edge{"a", "b"});
  }

  TEST_CASE("enumerate_paths") {
    CHECK(enumerate_paths(chain()) == std::vector<ToolPath>{{"a", "b", "c"}});
    CHECK(enumerate_paths(diamond()).size() == 2);

    auto g8 = DependencyGraph::load(fixture("graph8.json"));
    REQUIRE(g8.nodes.size() == 8);
    auto paths = enumerate_paths(g8);
    std::set<ToolPath> got(paths.begin(), paths.end());
    CHECK(got.size() == paths.size());
    CHECK(got == oracle::all_paths(g8));
    for (const auto& p : paths) CHECK(is_graph_path(g8, p));

    auto urban = DependencyGraph::load(fixture("graph_urban.json"));
    CHECK(enumerate_paths(urban).size() == 4);
    CHECK(enumerate_paths(g8, {2, 20}).size() == 2);
    CHECK_FALSE(is_graph_path(g8, {"s", "t"}));
  }
}
