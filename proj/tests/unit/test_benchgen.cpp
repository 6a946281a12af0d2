#include <fstream>
#include <mutex>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "htam/benchgen.hpp"
#include "htam/error.hpp"
#include "htam/mock.hpp"
#include "htam/registry.hpp"

using namespace htam;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TaskRecord task(std::string id, std::string question, std::string domain, std::string complexity, std::size_t len) {
  TaskRecord t;
  t.task_id = std::move(id);
  t.question = std::move(question);
  t.domain = std::move(domain);
  t.complexity = std::move(complexity);
  for (std::size_t i = 0; i < len; ++i) t.ground_truth.push_back("tool" + std::to_string(i));
  return t;
}

// One-hot vectors: every text is orthogonal to every other.
class OneHotEmbedder : public EmbeddingProvider {
 public:
  std::vector<Vector> embed(std::span<const std::string> texts) override {
    std::vector<Vector> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Vector v(texts.size(), 0.0);
      v[i] = 1.0;
      out.push_back(v);
    }
    return out;
  }
};

class FailingEmbedder : public EmbeddingProvider {
 public:
  std::vector<Vector> embed(std::span<const std::string>) override { throw std::runtime_error("offline"); }
};

// Records which texts reached the embedder.
class RecordingEmbedder : public EmbeddingProvider {
 public:
  std::vector<Vector> embed(std::span<const std::string> texts) override {
    seen.insert(seen.end(), texts.begin(), texts.end());
    return inner.embed(texts);
  }
  LexicalEmbedder inner;
  std::vector<std::string> seen;
};

// Scripted DAG answer for the template prompt; the keyword mock for the rest.
std::shared_ptr<ScriptedBackend> dag_backend(const std::string& dag_json) {
  auto b = std::make_shared<ScriptedBackend>();
  b->on_contains("Generate a typical task dependency template", dag_json);
  b->otherwise([](std::string_view p) { return KeywordRoutingBackend::respond(p); });
  return b;
}

}  // namespace

TEST_SUITE("benchgen") {
  TEST_CASE("dependency template is parsed and validated") {
    const std::string six = R"({"domain":"Marine & Water Resources","description":"d",
      "nodes":["recommend_satellite_platforms","download_satellite_imagery","cloud_mask_removal",
               "segment_water_bodies","assess_water_quality","generate_analysis_reports"],
      "edges":[["recommend_satellite_platforms","download_satellite_imagery"],
               ["download_satellite_imagery","cloud_mask_removal"],["cloud_mask_removal","segment_water_bodies"],
               ["segment_water_bodies","assess_water_quality"],["assess_water_quality","generate_analysis_reports"]]})";
    auto b = dag_backend(six);
    auto g = generate_dependency_template("Marine & Water Resources", "Simple", earthagent_catalog(), *b);
    CHECK(g.nodes.size() == 6);
    CHECK(g.edges.size() == 5);
    CHECK(b->calls() == 1);
  }

  TEST_CASE("cyclic template is re-asked once then rejected") {
    auto b = dag_backend(R"({"nodes":["web_search","summarize_text"],
      "edges":[["web_search","summarize_text"],["summarize_text","web_search"]]})");
    CHECK_THROWS_AS(generate_dependency_template("Defense & Security", "Simple", earthagent_catalog(), *b), Error);
    CHECK(b->calls() == 2);
    CHECK(b->prompts()[1].find("Your previous answer was rejected") != std::string::npos);
  }

  TEST_CASE("keyword mock templates are valid") {
    KeywordRoutingBackend mock;
    auto domains = DomainTable::bundled();
    for (const auto& d : domains.domains) {
      auto g = generate_dependency_template(d, "Medium", earthagent_catalog(), mock, domains, "8-12");
      CHECK(validate_dag(g).ok());
      CHECK_FALSE(enumerate_paths(g).empty());
    }
  }

  TEST_CASE("parameterization") {
    ScriptedBackend ok;
    ok.otherwise(R"({"parameterized_tools":[
      {"tool":"download_satellite_imagery","params":{"platform":"Sentinel-2","area":"bay","colour":"red"}},
      {"tool":"detect_ships","params":{"image_path":"a.tif"}}]})");
    std::vector<std::string> warnings;
    auto steps = parameterize_path({"download_satellite_imagery", "detect_ships"}, earthagent_catalog(), ok, {},
                                   &warnings);
    REQUIRE(steps.size() == 2);
    CHECK(steps[0].params["platform"] == "Sentinel-2");
    CHECK_FALSE(steps[0].params.contains("colour"));
    CHECK(warnings.size() == 1);
    CHECK(steps[1].params["image_path"] == "a.tif");

    ScriptedBackend swapped;
    swapped.otherwise(R"({"parameterized_tools":[{"tool":"detect_ships","params":{}},
      {"tool":"download_satellite_imagery","params":{}}]})");
    CHECK_THROWS_AS(parameterize_path({"download_satellite_imagery", "detect_ships"}, earthagent_catalog(), swapped),
                    Error);
  }

  TEST_CASE("question normalization") {
    auto q = normalize_question("How many ships entered the bay in 2023?");
    CHECK(q.text == "How many ships entered the bay in 2023?");
    CHECK_FALSE(q.truncated);
    q = normalize_question("\"Map the flood extent in Dhaka. Then compare with 2022.\"\n\nSecond paragraph.");
    CHECK(q.text == "Map the flood extent in Dhaka.");
    CHECK(q.truncated);
    ScriptedBackend empty;
    empty.otherwise("   ");
    CHECK_THROWS_AS(formulate_question({{"web_search", {}}}, empty), Error);
  }

  TEST_CASE("complexity bands") {
    CHECK(verify_complexity(task("t", "q", "d", "Simple", 4)).passed);
    CHECK_FALSE(verify_complexity(task("t", "q", "d", "Complex", 4)).passed);
    CHECK(verify_complexity(task("t", "q", "d", "Medium", 6)).passed);
    CHECK(verify_complexity(task("t", "q", "d", "Complex", 16)).passed);
  }

  TEST_CASE("domain relevance") {
    auto table = DomainTable::bundled();
    CHECK(check_domain_relevance(task("t", "Track coastal erosion near Malibu", "Marine & Water Resources", "Simple", 4),
                                 table)
              .passed);
    CHECK_FALSE(
        check_domain_relevance(task("t", "What time is it?", "Marine & Water Resources", "Simple", 4), table).passed);
    // "urban" belongs to another domain's list only.
    CHECK_FALSE(
        check_domain_relevance(task("t", "Map urban sprawl in Lagos", "Marine & Water Resources", "Simple", 4), table)
            .passed);
    bool asked = false;
    auto rejecting = [&](const TaskRecord&) {
      asked = true;
      return false;
    };
    CHECK_FALSE(check_domain_relevance(task("t", "What time is it?", "Marine & Water Resources", "Simple", 4), table,
                                       1, rejecting)
                    .passed);
    CHECK_FALSE(asked);
    CHECK_FALSE(check_domain_relevance(task("t", "Coastal tides", "Marine & Water Resources", "Simple", 4), table, 1,
                                       rejecting)
                    .passed);
    CHECK(asked);
  }

  TEST_CASE("deduplication") {
    std::vector<TaskRecord> tasks{task("a", "Map flooded fields near Dhaka in July 2023.", "d", "Simple", 4),
                                  task("b", "Map flooded fields near Dhaka in July 2023!", "d", "Simple", 4),
                                  task("c", "Count container ships in Rotterdam harbour.", "d", "Simple", 4)};
    LexicalEmbedder lexical;
    auto r = deduplicate(tasks, lexical, 0.9);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0].removed == "b");
    CHECK(r.removed[0].kept == "a");
    CHECK(r.retained.size() == 2);

    auto exact = deduplicate(tasks, lexical, 1.0);
    CHECK(exact.removed.size() == 1);
    tasks[1].question = "Map flooded fields near Dhaka in July 2024.";
    CHECK(deduplicate(tasks, lexical, 1.0).removed.empty());

    OneHotEmbedder orthogonal;
    CHECK(deduplicate(tasks, orthogonal, 0.9).removed.empty());

    CHECK_THROWS_AS(deduplicate(tasks, lexical, 0.0), Error);
    CHECK_THROWS_AS(deduplicate(tasks, lexical, 1.5), Error);
    FailingEmbedder failing;
    try {
      deduplicate(tasks, failing, 0.9);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kProviderFailure);
    }
  }

  TEST_CASE("pipeline with the keyword mock emits schema-valid tasks") {
    KeywordRoutingBackend mock;
    LexicalEmbedder embedder;
    BenchConfig cfg;
    cfg.domains = {"Agriculture & Forestry", "Marine & Water Resources"};
    cfg.complexities = {"Simple"};
    cfg.seed = 9;
    auto result = build_benchmark(cfg, earthagent_catalog(), mock, embedder);
    CHECK(result.tasks.size() == 2);
    auto domains = DomainTable::bundled().domains;
    for (const auto& t : result.tasks) {
      CHECK_NOTHROW(t.validate(domains));
      CHECK(t.parameterized.size() == t.ground_truth.size());
      CHECK(TaskRecord::from_json(t.to_json()).to_json() == t.to_json());
    }
    const auto& rep = result.report;
    CHECK(rep.generated == rep.retained + rep.removed_complexity + rep.removed_relevance + rep.removed_dedup);
    CHECK(result.tasks[0].task_id != result.tasks[1].task_id);
    auto again = build_benchmark(cfg, earthagent_catalog(), mock, embedder);
    CHECK(tasks_to_jsonl(again.tasks) == tasks_to_jsonl(result.tasks));
  }

  TEST_CASE("stages run complexity, relevance, dedup in that order") {
    KeywordRoutingBackend mock;
    RecordingEmbedder embedder;
    BenchConfig cfg;
    cfg.domains = {"Agriculture & Forestry", "Marine & Water Resources"};
    cfg.complexities = {"Simple", "Complex"};
    cfg.bands["Complex"] = {100, 200};
    std::mutex m;
    std::vector<std::string> classified;
    cfg.classifier = [&](const TaskRecord& t) {
      std::lock_guard lock(m);
      classified.push_back(t.complexity + "|" + t.domain);
      return t.domain != "Marine & Water Resources";
    };
    auto result = build_benchmark(cfg, earthagent_catalog(), mock, embedder);
    const auto& rep = result.report;
    CHECK(rep.removed_complexity == 2);
    CHECK(rep.removed_relevance == 1);
    CHECK(rep.retained == 1);
    for (const auto& c : classified) CHECK(c.rfind("Simple|", 0) == 0);
    CHECK(embedder.seen.size() == 1);
    int last = -1;
    for (const auto& r : rep.removals) {
      CHECK(static_cast<int>(r.stage) >= last);
      last = static_cast<int>(r.stage);
    }
    CHECK(rep.generated == rep.retained + rep.removed_complexity + rep.removed_relevance + rep.removed_dedup);
  }

  TEST_CASE("urban fixture graph yields four tasks") {
    auto b = dag_backend(slurp(fixture("graph_urban.json")));
    LexicalEmbedder embedder;
    BenchConfig cfg;
    cfg.domains = {"Urban & Regional Planning"};
    cfg.complexities = {"Medium"};
    cfg.tasks_per_unit = 4;
    auto result = build_benchmark(cfg, earthagent_catalog(), *b, embedder);
    const auto& rep = result.report;
    CHECK(rep.generated == 4);
    CHECK(rep.removed_complexity == 0);
    CHECK(rep.removed_relevance == 0);
    // The mock phrases questions from the analysis tools only, so the two
    // correction variants of each branch collapse to one question.
    CHECK(rep.removed_dedup == 2);
    CHECK(rep.retained == 2);
    CHECK(rep.to_json()["generated"] == 4);
  }

  TEST_CASE("seeded ids are stable and well formed") {
    CHECK(seeded_uuid(1, 0) == seeded_uuid(1, 0));
    CHECK(seeded_uuid(1, 0) != seeded_uuid(1, 1));
    const auto id = seeded_uuid(7, 3);
    CHECK(id.size() == 36);
    CHECK(id[14] == '4');
  }
}
