#include "doctest.h"
#include "htam/backend.hpp"
#include "htam/error.hpp"
#include "htam/metrics.hpp"
#include "htam/mock.hpp"
#include "oracles.hpp"

using namespace htam;

namespace {

// Symmetric similarity table over a small alphabet.
class TableSimilarity : public SimilarityProvider {
 public:
  explicit TableSimilarity(std::map<std::pair<std::string, std::string>, double> t) : t_(std::move(t)) {}
  double similarity(std::string_view a, std::string_view b) const override {
    if (a == b) return 1.0;
    auto key = std::string(a) < std::string(b) ? std::pair{std::string(a), std::string(b)}
                                               : std::pair{std::string(b), std::string(a)};
    return t_.at(key);
  }

 private:
  std::map<std::pair<std::string, std::string>, double> t_;
};

std::vector<ToolPath> all_sequences(const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::vector<ToolPath> out{{}};
  std::vector<ToolPath> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<ToolPath> next;
    for (const auto& p : frontier) {
      for (const auto& a : alphabet) {
        auto q = p;
        q.push_back(a);
        next.push_back(q);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

TaskRecord task_with(ToolPath gt) {
  TaskRecord t;
  t.task_id = "t1";
  t.question = "Detect ships near the harbour";
  t.domain = "Defense & Security";
  t.complexity = "Simple";
  t.ground_truth = std::move(gt);
  return t;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("recall examples") {
    CHECK(key_recall({"a", "b"}, {"a", "b", "c"}) == 1.0);
    CHECK(key_recall({"a", "b"}, {"a", "a", "c"}) == 0.5);
    CHECK(key_recall({"a", "b"}, {}) == 0.0);
    CHECK_THROWS_AS(key_recall({}, {"a"}), Error);
  }

  TEST_CASE("precision examples") {
    CHECK(key_precision({"a", "c"}, {"a", "b"}).score == 0.5);
    CHECK(key_precision({"a"}, {"a"}).score == 1.0);
    auto empty = key_precision({}, {"a"});
    CHECK(empty.score == 0.0);
    CHECK(empty.empty_key);
  }

  TEST_CASE("f1 examples") {
    CHECK(f1(1, 1) == 1.0);
    CHECK(f1(0.5, 0.5) == 0.5);
    CHECK(f1(0, 0.7) == 0.0);
    CHECK(f1(0, 0) == 0.0);
  }

  TEST_CASE("correctness metrics agree with bitmask set arithmetic on all 256 subset pairs") {
    const std::vector<std::string> universe{"t0", "t1", "t2", "t3"};
    auto tools_of = [&](unsigned mask) {
      ToolPath p;
      for (unsigned i = 0; i < 4; ++i) {
        if (mask & (1u << i)) p.push_back(universe[i]);
      }
      return p;
    };
    int checked = 0;
    for (unsigned a = 0; a < 16; ++a) {
      for (unsigned b = 0; b < 16; ++b) {
        const ToolPath pa = tools_of(a), pb = tools_of(b);
        const ToolSet sa(pa.begin(), pa.end());
        if (a == 0) {
          CHECK_THROWS_AS(key_recall(sa, pb), Error);
        } else {
          CHECK(key_recall(sa, pb) == oracle::mask_ratio(b, a));
        }
        auto p = key_precision(sa, pb);
        CHECK(p.score == oracle::mask_ratio(b, a));
        CHECK(p.empty_key == (a == 0));
        const double r = oracle::mask_ratio(a, b), pr = oracle::mask_ratio(b, a);
        if (b != 0) {
          auto c = score_correctness(ToolSet(pb.begin(), pb.end()), sa, pa, pb);
          CHECK(c.recall == r);
          CHECK(c.precision == pr);
          CHECK(c.f1 == doctest::Approx(r + pr == 0 ? 0.0 : 2 * r * pr / (r + pr)));
        }
        ++checked;
      }
    }
    CHECK(checked == 256);
  }

  TEST_CASE("edit distance examples") {
    auto uni = CostModel::uniform();
    ExactSimilarity exact;
    CHECK(weighted_edit_distance({"a", "b"}, {"a", "b"}, uni, exact) == 0.0);
    CHECK(weighted_edit_distance({"a", "b", "c"}, {"a", "x", "c"}, uni, exact) == 1.0);
    CHECK(path_similarity({"a", "b", "c"}, {"a", "x", "c"}, uni, exact) == doctest::Approx(1.0 - 1.0 / 6.0));
    CHECK(path_similarity({"a"}, {"b"}, uni, exact) == doctest::Approx(0.5));
    CHECK(path_similarity({"a", "b"}, {"a", "b"}, uni, exact) == 1.0);
    CHECK(path_similarity({}, {"a"}, uni, exact) == 0.0);
    CHECK_THROWS_AS(path_similarity({}, {}, uni, exact), Error);
  }

  TEST_CASE("edit distance equals exhaustive edit scripts") {
    const std::vector<std::string> alphabet{"x", "y", "z"};
    CentralityScores scores;
    scores.odc = {{"x", 1.0}, {"y", 0.5}, {"z", 0.0}};
    scores.prc = {{"x", 0.2}, {"y", 0.5}, {"z", 0.3}};
    auto costs = build_cost_model(scores, {1.3, 0.8, false});
    TableSimilarity sim({{{"x", "y"}, 0.4}, {{"x", "z"}, 0.05}, {{"y", "z"}, 0.9}});
    auto del = [&](const std::string& t) { return costs.deletion_cost(t); };
    auto ins = [&](const std::string& t) { return costs.insertion_cost(t); };
    auto sub = [&](const std::string& a, const std::string& b) { return a == b ? 0.0 : 1.0 - sim.similarity(a, b); };
    auto seqs = all_sequences(alphabet, 3);
    for (const auto& a : seqs) {
      for (const auto& b : seqs) {
        CHECK(std::abs(weighted_edit_distance(a, b, costs, sim) - oracle::edit_script_min(a, b, 0, 0, del, ins, sub)) <=
              1e-9);
      }
    }
  }

  TEST_CASE("uniform mode reduces to Levenshtein") {
    std::mt19937_64 rng(3);
    auto uni = CostModel::uniform();
    ExactSimilarity exact;
    for (int t = 0; t < 200; ++t) {
      ToolPath a(rng() % 8), b(rng() % 8);
      for (auto& x : a) x = std::string(1, static_cast<char>('a' + rng() % 4));
      for (auto& x : b) x = std::string(1, static_cast<char>('a' + rng() % 4));
      CHECK(weighted_edit_distance(a, b, uni, exact) == static_cast<double>(oracle::levenshtein(a, b)));
    }
  }

  TEST_CASE("max possible cost clamps at the base cost") {
    auto uni = CostModel::uniform(2.0);
    CHECK(max_possible_cost({"a"}, {"b", "c"}, uni) == 6.0);
    CHECK(max_possible_cost({}, {}, uni) == 2.0);
  }

  TEST_CASE("lexical similarity") {
    CHECK(lexical_similarity("a", "a") == 1.0);
    CHECK(lexical_similarity("detect_ships", "detect_buildings") == doctest::Approx(1.0 / 3.0));
    CHECK(lexical_similarity("crop_image", "web_search") == 0.0);
  }

  TEST_CASE("embedding similarity is symmetric and bounded") {
    EmbeddingSimilarity sim(std::make_shared<LexicalEmbedder>(), {{"a", "detect ships"}, {"b", "detect ships now"}});
    const double ab = sim.similarity("a", "b");
    CHECK(ab == sim.similarity("b", "a"));
    CHECK(ab > 0.0);
    CHECK(ab <= 1.0);
    CHECK(sim.similarity("a", "a") == doctest::Approx(1.0));
  }

  TEST_CASE("key extraction with the mock judge returns deduplicated paths") {
    KeywordRoutingBackend judge;
    auto task = task_with({"download_satellite_imagery", "detect_ships", "detect_ships"});
    auto ks = extract_key_sets(judge, task, {"detect_ships", "crop_image", "crop_image"});
    CHECK(ks.key_gt == ToolSet{"download_satellite_imagery", "detect_ships"});
    CHECK(ks.key_agent == ToolSet{"detect_ships", "crop_image"});
    CHECK(ks.flags.empty());
  }

  TEST_CASE("key extraction clamps, retries and falls back") {
    auto task = task_with({"download_satellite_imagery", "detect_ships"});

    ScriptedBackend outside;
    outside.otherwise(R"({"key_steps": ["detect_ships", "web_search"]})");
    auto ks = extract_key_sets(outside, task, {"detect_ships"});
    CHECK(ks.key_gt == ToolSet{"detect_ships"});

    ScriptedBackend empty;
    empty.otherwise(R"({"key_steps": []})");
    ks = extract_key_sets(empty, task, {"crop_image"});
    CHECK(ks.key_gt == ToolSet{"download_satellite_imagery", "detect_ships"});
    CHECK(ks.key_agent == ToolSet{"crop_image"});
    CHECK(empty.calls() == 4);
    CHECK(std::find(ks.flags.begin(), ks.flags.end(), "key_gt_fallback") != ks.flags.end());

    ScriptedBackend prose;
    prose.otherwise("I cannot decide.");
    CHECK_THROWS_AS(extract_key_sets(prose, task, {"crop_image"}), Error);
  }

  TEST_CASE("stored key steps skip the judge and the cache is shared") {
    auto task = task_with({"download_satellite_imagery", "detect_ships"});
    task.key_steps = std::vector<std::string>{"detect_ships"};
    ScriptedBackend judge;
    judge.otherwise(R"({"key_steps": ["detect_ships"]})");
    KeySetCache cache;
    KeyExtractionOptions opts;
    opts.cache = &cache;
    auto ks = extract_key_sets(judge, task, {"detect_ships"}, opts);
    CHECK(ks.key_gt == ToolSet{"detect_ships"});
    CHECK(judge.calls() == 1);
    extract_key_sets(judge, task, {"detect_ships"}, opts);
    CHECK(judge.calls() == 1);
    CHECK(extract_key_sets(judge, task, {}, opts).key_agent.empty());
  }
}
