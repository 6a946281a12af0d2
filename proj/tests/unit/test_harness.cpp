#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "htam/error.hpp"
#include "htam/harness.hpp"
#include "htam/mock.hpp"

using namespace htam;
using nlohmann::json;

namespace {

RunConfig base_config(std::vector<std::string> archs) {
  return RunConfig::from_json({{"tasks_path", "tasks10.jsonl"}, {"architectures", archs}, {"workers", 3}},
                              HTAM_FIXTURE_DIR);
}

json body_of(const EvalReport& r) {
  json j = r.to_json();
  j["provenance"].erase("timestamps");
  return j;
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

TEST_SUITE("harness") {
  TEST_CASE("usage stats on five plans match a hand tabulation") {
    std::ifstream in(fixture("usage_plans.json"));
    auto plans = json::parse(in).get<std::vector<ToolPath>>();
    auto stats = tool_usage_stats(plans);
    // a: 0, 1, 0, 1 | c: 1, 0, 0.25, 1 | b: 0.5, 0, 0.75 | d: 0.5, 0
    REQUIRE(stats.size() == 4);
    CHECK(stats[0].tool == "a");
    CHECK(stats[0].frequency == 4);
    CHECK(stats[0].avg_position == doctest::Approx(0.5));
    CHECK(stats[1].tool == "c");
    CHECK(stats[1].frequency == 4);
    CHECK(stats[1].avg_position == doctest::Approx(0.5625));
    CHECK(stats[2].tool == "b");
    CHECK(stats[2].frequency == 3);
    CHECK(stats[2].avg_position == doctest::Approx(1.25 / 3));
    CHECK(stats[3].tool == "d");
    CHECK(stats[3].frequency == 2);
    CHECK(stats[3].avg_position == doctest::Approx(0.25));
  }

  TEST_CASE("usage boundaries") {
    auto stats = tool_usage_stats({{"first", "mid", "last"}, {"first", "x", "last"}});
    for (const auto& s : stats) {
      if (s.tool == "first") CHECK(s.avg_position == 0.0);
      if (s.tool == "last") CHECK(s.avg_position == 1.0);
    }
  }

  TEST_CASE("config validation") {
    CHECK(code_of([] { RunConfig::from_json({{"tasks_path", "missing.jsonl"}, {"architectures", {"htam"}}}, HTAM_FIXTURE_DIR); }) ==
          ErrorCode::kConfigError);
    CHECK(code_of([] { RunConfig::from_json({{"tasks_path", "tasks10.jsonl"}, {"architectures", json::array()}}, HTAM_FIXTURE_DIR); }) ==
          ErrorCode::kConfigError);
    CHECK(code_of([] {
            RunConfig::from_json({{"tasks_path", "tasks10.jsonl"}, {"architectures", {"htam"}}, {"workers", 0}},
                                 HTAM_FIXTURE_DIR);
          }) == ErrorCode::kConfigError);
    CHECK(code_of([] { RunConfig::from_json({{"tasks_path", "tasks10.jsonl"}, {"architectures", {"magic"}}}, HTAM_FIXTURE_DIR); }) ==
          ErrorCode::kConfigError);
    CHECK(code_of([] { RunConfig::load(fixture("nope.json")); }) == ErrorCode::kConfigError);
    auto cfg = RunConfig::load(fixture("eval_config.json"));
    CHECK(cfg.labels() == std::vector<std::string>{"htam", "cot", "react"});
    CHECK(cfg.tasks_path.is_absolute());
    auto again = RunConfig::from_json(cfg.to_json());
    CHECK(again.to_json() == cfg.to_json());
  }

  TEST_CASE("two architectures give 20 rows and 10 battles") {
    auto report = run_evaluation(base_config({"htam", "cot"}));
    CHECK(report.per_task.size() == 20);
    CHECK(report.battles.size() == 10);
    CHECK(report.elo.size() == 2);
    CHECK(report.elo.at("htam") + report.elo.at("cot") == doctest::Approx(2000.0));
    for (const auto& r : report.per_task) {
      CHECK(r.path_similarity >= 0.0);
      CHECK(r.path_similarity <= 1.0);
    }
    CHECK_FALSE(report.has_failures());
  }

  TEST_CASE("external plans bypass planning") {
    auto cfg = RunConfig::from_json({{"tasks_path", "tasks10.jsonl"},
                                     {"architectures", {"external"}},
                                     {"external_plans", {{"external", "aflow_plans.jsonl"}}}},
                                    HTAM_FIXTURE_DIR);
    auto ctx = make_context(cfg);
    auto planner = std::make_shared<ScriptedBackend>();
    ctx.planner = planner;
    ctx.judge = std::make_shared<KeywordRoutingBackend>();
    auto report = run_evaluation(cfg, ctx);
    CHECK(planner->calls() == 0);
    CHECK(report.per_task.size() == 10);
    CHECK(report.battles.empty());

    auto three = RunConfig::load(fixture("eval_config_external.json"));
    auto full = run_evaluation(three);
    CHECK(full.architectures == std::vector<std::string>{"htam", "plan_execute", "external"});
    CHECK(full.battles.size() == 30);
  }

  TEST_CASE("re-runs are identical apart from timestamps") {
    auto cfg = base_config({"htam", "react"});
    auto a = run_evaluation(cfg);
    cfg.workers = 1;
    auto b = run_evaluation(cfg);
    CHECK(body_of(a)["per_task"] == body_of(b)["per_task"]);
    CHECK(body_of(a)["elo"] == body_of(b)["elo"]);
    CHECK(body_of(a)["battles"] == body_of(b)["battles"]);
  }

  TEST_CASE("planning failures are scored as empty plans") {
    auto cfg = base_config({"htam"});
    auto ctx = make_context(cfg);
    auto broken = std::make_shared<ScriptedBackend>();
    broken->otherwise("not a selection");
    ctx.planner = broken;
    ctx.judge = std::make_shared<KeywordRoutingBackend>();
    auto report = run_evaluation(cfg, ctx);
    REQUIRE(report.per_task.size() == 10);
    for (const auto& r : report.per_task) {
      CHECK(r.tools.empty());
      CHECK(r.recall_key == 0.0);
      CHECK(std::find(r.flags.begin(), r.flags.end(), "planning_failed") != r.flags.end());
    }
    CHECK(report.has_failures());
  }

  TEST_CASE("summaries are recomputable from rows") {
    auto report = run_evaluation(base_config({"htam", "cot"}));
    auto by_cx = summarize(report, GroupBy::kComplexity);
    auto overall = summarize(report, GroupBy::kOverall);
    REQUIRE(overall.size() == 2);
    for (const auto& o : overall) {
      double weighted = 0.0;
      std::size_t n = 0;
      for (const auto& r : by_cx) {
        if (r.architecture != o.architecture) continue;
        weighted += r.f1_key * static_cast<double>(r.tasks);
        n += r.tasks;
      }
      CHECK(n == 10);
      CHECK(std::abs(weighted / static_cast<double>(n) - o.f1_key) <= 1e-12);
      CHECK(o.holistic == report.elo.at(o.architecture));
    }
    // The single Complex task's row equals its block.
    for (const auto& r : by_cx) {
      if (r.group != "Complex") continue;
      CHECK(r.tasks == 1);
      for (const auto& row : report.per_task) {
        if (row.complexity == "Complex" && row.architecture == r.architecture) CHECK(row.f1_key == r.f1_key);
      }
    }
    EvalReport partial = report;
    partial.per_task.erase(std::remove_if(partial.per_task.begin(), partial.per_task.end(),
                                          [](const MetricRecord& r) { return r.complexity == "Complex"; }),
                           partial.per_task.end());
    for (const auto& r : summarize(partial, GroupBy::kComplexity)) CHECK(r.group != "Complex");
    CHECK_THROWS_AS(parse_group_by("weekday"), Error);
  }

  TEST_CASE("report formats round-trip") {
    auto report = run_evaluation(base_config({"htam", "cot"}));
    auto dir = std::filesystem::temp_directory_path() / "htam_report_test";
    std::filesystem::remove_all(dir);

    emit_report(report, ReportFormat::kJson, dir / "report.json");
    auto loaded = EvalReport::load(dir / "report.json");
    CHECK(loaded.to_json() == report.to_json());

    std::ifstream in(dir / "report.json");
    json tampered = json::parse(in);
    tampered["summary"]["overall"][0]["F1_key"] = 0.123;
    CHECK_THROWS_AS(EvalReport::from_json(tampered), Error);

    auto files = emit_report(report, ReportFormat::kCsv, dir / "csv");
    CHECK(files.size() == 7);
    std::ifstream summary(dir / "csv" / "summary_overall.csv");
    std::string header;
    std::getline(summary, header);
    CHECK(header == "group,architecture,tasks,Recall_key,Precision_key,F1_key,Structural,Holistic");
    std::ifstream positions(dir / "csv" / "positions.csv");
    std::getline(positions, header);
    CHECK(header == "tool,htam,cot");

    emit_report(report, ReportFormat::kMarkdown, dir / "summary.md");
    std::ifstream md(dir / "summary.md");
    std::stringstream text;
    text << md.rdbuf();
    for (const char* col : {"Recall_key", "Precision_key", "F1_key", "Structural", "Holistic", "| Overall |"}) {
      CHECK(text.str().find(col) != std::string::npos);
    }
    CHECK(parse_report_format("md") == ReportFormat::kMarkdown);
    CHECK_THROWS_AS(parse_report_format("xml"), Error);
    std::filesystem::remove_all(dir);
  }
}
