#include "doctest.h"
#include "fixtures.hpp"
#include "htam/backend.hpp"
#include "htam/error.hpp"
#include "htam/mock.hpp"
#include "htam/parse.hpp"
#include "htam/planner.hpp"
#include "htam/registry.hpp"
#include "htam/task.hpp"

#include <set>

using namespace htam;

namespace {

const char* kCoastal =
    "Quantify the statistically significant trend of coastal erosion along the shoreline between latitudes 34N and 35N "
    "for the year 2023.";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

// Responds with successive canned answers, repeating the last one.
ScriptedBackend::Responder sequence(std::vector<std::string> answers) {
  auto i = std::make_shared<std::size_t>(0);
  return [answers = std::move(answers), i](std::string_view) {
    const auto& out = answers[std::min(*i, answers.size() - 1)];
    ++*i;
    return out;
  };
}

bool layer_order_holds(const Plan& plan) {
  for (std::size_t i = 1; i < plan.steps.size(); ++i) {
    if (plan.steps[i - 1].layer > plan.steps[i].layer) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("layer-3 selection from a scripted reply") {
    ScriptedBackend b;
    b.otherwise(R"({"selected_agent":"GeneralChatBotAgent","subtask":"answer"})");
    auto s = select_layer("What is remote sensing?", 3, {}, earthagent_registry(), b);
    CHECK(s.layer == 3);
    REQUIRE(s.chosen.size() == 1);
    CHECK(s.chosen[0].agent == "GeneralChatBotAgent");
    CHECK(s.chosen[0].subtask == "answer");
  }

  TEST_CASE("unregistered agents are dropped") {
    ScriptedBackend b;
    b.otherwise(
        R"({"selected_agents":[{"name":"NopeAgent","subtask":"x"},{"name":"ObjectDetectorAgent","subtask":"y"}]})");
    Selection top{3, {{"DefenseSecurityAgent", "watch"}}};
    auto s = select_layer("Detect ships", 2, {top}, earthagent_registry(), b);
    REQUIRE(s.chosen.size() == 1);
    CHECK(s.chosen[0].agent == "ObjectDetectorAgent");

    ScriptedBackend none;
    none.otherwise(R"({"selected_agent":"NopeAgent","subtask":"x"})");
    CHECK(code_of([&] { select_layer("q", 3, {}, earthagent_registry(), none); }) == ErrorCode::kEmptySelection);

    ScriptedBackend prose;
    prose.otherwise("I would pick a good one.");
    CHECK(code_of([&] { select_layer("q", 3, {}, earthagent_registry(), prose); }) ==
          ErrorCode::kUnparseableSelection);
  }

  TEST_CASE("selection is clamped to the layer cap") {
    ScriptedBackend b;
    b.otherwise(R"({"selected_agents":[{"name":"ObjectDetectorAgent","subtask":"a"},
      {"name":"SemanticSegmentorAgent","subtask":"b"},{"name":"SceneClassifierAgent","subtask":"c"},
      {"name":"ChangeDetectorAgent","subtask":"d"}]})");
    Selection top{3, {{"UrbanistAIAgent", "x"}}};
    CHECK(select_layer("q", 2, {top}, earthagent_registry(), b).chosen.size() == 3);
  }

  TEST_CASE("crop-health query routes to AgriScoutAgent under the keyword mock") {
    KeywordRoutingBackend mock;
    auto s = select_layer("Assess crop health and yield for the corn fields this season", 3, {}, earthagent_registry(),
                          mock);
    REQUIRE(s.chosen.size() == 1);
    CHECK(s.chosen[0].agent == "AgriScoutAgent");
  }

  TEST_CASE("three-layer scripted plan concatenates layer 1, 2, 3 tools") {
    auto b = ScriptedBackend::load(fixture("scripted_coastal.json"));
    auto plan = plan_htam(kCoastal, earthagent_registry(), *b);
    CHECK(plan.metric_path() == ToolPath{"recommend_satellite_platforms", "download_satellite_imagery",
                                         "get_weather_data", "atmospheric_correction", "cloud_mask_removal",
                                         "geometric_correction", "classify_landscape_type", "classify_terrain_type",
                                         "assess_coastal_erosion", "linear_regression"});
    CHECK(layer_order_holds(plan));
    CHECK(plan.steps.front().agent == "DataFetcherAgent");
    CHECK(plan.steps.back().agent == "OceanographerAgent");
    CHECK(b->calls() == 3 + 4);
    CHECK(plan.trace.size() == 7);
  }

  TEST_CASE("single-layer registry") {
    auto catalog = earthagent_catalog();
    Registry solo(1, {{"SoloAgent", 1, "Does everything.", {"web_search", "summarize_text"}}}, catalog);
    ScriptedBackend b;
    b.on_contains("You are SoloAgent", R"({"tools":["summarize_text","web_search"]})");
    b.otherwise(R"({"selected_agent":"SoloAgent","subtask":"all"})");
    auto plan = plan_htam("Summarize the news", solo, b);
    CHECK(plan.metric_path() == ToolPath{"summarize_text", "web_search"});
  }

  TEST_CASE("chain-of-thought parsing") {
    ScriptedBackend b;
    b.otherwise(
        "step1: get imagery; download_satellite_imagery\r\n"
        "**Step 2**: find ships; detect_ships\n"
        "step3: summarize; generate_analysis_reports\n");
    auto plan = plan_cot("Count ships", earthagent_catalog(), b);
    CHECK(plan.metric_path() == ToolPath{"download_satellite_imagery", "detect_ships", "generate_analysis_reports"});

    ScriptedBackend free_text;
    free_text.otherwise("step1: I will download the dataset for analysis\nstep2: then; detect_ships\n");
    plan = plan_cot("Count ships", earthagent_catalog(), free_text);
    CHECK(plan.metric_path() == ToolPath{"detect_ships"});
    REQUIRE(plan.quarantined.size() == 1);
    CHECK(plan.quarantined[0] == "I will download the dataset for analysis");

    ScriptedBackend empty;
    empty.otherwise("");
    CHECK(code_of([&] { plan_cot("q", earthagent_catalog(), empty); }) == ErrorCode::kUnparseableSelection);
  }

  TEST_CASE("ReAct immediate finish") {
    ScriptedBackend b;
    b.on_contains("decide the next action", "FINISH");
    b.otherwise("Thinking.");
    auto plan = plan_react("q", earthagent_catalog(), b);
    CHECK(plan.steps.empty());
    CHECK(plan.has_flag("finished_without_action"));
  }

  TEST_CASE("ReAct three actions") {
    ScriptedBackend b;
    b.on([](std::string_view p) { return p.find("decide the next action") != p.npos; },
         sequence({R"({"tool":"download_satellite_imagery","parameters":{"area":"x"}})", R"({"tool":"detect_ships"})",
                   R"({"tool":"generate_analysis_reports","parameters":{}})", "FINISH"}));
    b.on_contains("fully imagine", "The tool ran.");
    b.otherwise("Thinking.");
    auto plan = plan_react("q", earthagent_catalog(), b);
    CHECK(plan.metric_path() ==
          ToolPath{"download_satellite_imagery", "detect_ships", "generate_analysis_reports"});
    CHECK(plan.steps[0].params["area"] == "x");
    int observations = 0;
    for (const auto& e : plan.trace) observations += e.stage.rfind("observation_", 0) == 0;
    CHECK(observations == 3);
    CHECK_FALSE(plan.has_flag("max_steps_reached"));
  }

  TEST_CASE("repetition-prone ReAct is capped at max_steps") {
    auto tasks = load_tasks(fixture("tasks10.jsonl"));
    auto it = std::find_if(tasks.begin(), tasks.end(), [](const TaskRecord& t) { return t.task_id.rfind("e094fa9a", 0) == 0; });
    REQUIRE(it != tasks.end());
    KeywordRoutingBackend repeat(MockOptions{true});
    auto plan = plan_react(it->question, earthagent_catalog(), repeat);
    CHECK(plan.steps.size() == 10);
    CHECK(plan.has_flag("max_steps_reached"));
    auto tools = plan.metric_path();
    CHECK(std::set<std::string>(tools.begin(), tools.end()).size() == 1);
  }

  TEST_CASE("plan and execute") {
    ScriptedBackend b;
    b.otherwise(R"({"plan":[{"tool":"download_satellite_imagery","parameters":{}},{"tool":"crop_image"},
      {"tool":"detect_ships"},{"tool":"generate_analysis_reports"}]})");
    CHECK(plan_plan_execute("q", earthagent_catalog(), b).steps.size() == 4);

    ScriptedBackend prose;
    prose.otherwise("Sure! Here is my plan: {\"plan\": [{\"tool\": \"web_search\"}]} Hope it helps.");
    CHECK(plan_plan_execute("q", earthagent_catalog(), prose).metric_path() == ToolPath{"web_search"});

    ScriptedBackend broken;
    broken.otherwise("{\"plan\": [ {\"tool\": ");
    CHECK(code_of([&] { plan_plan_execute("q", earthagent_catalog(), broken); }) ==
          ErrorCode::kUnparseableSelection);
  }

  TEST_CASE("debate with two debaters and no free rounds") {
    ScriptedBackend b;
    b.on([](std::string_view p) { return p.find("In this initial round") != p.npos; },
         sequence({R"({"initial_tool_trajectory":["web_search","summarize_text"]})",
                            R"({"initial_tool_trajectory":["translate_text"]})"}));
    b.on_contains("judge/summarizer", R"({"final_tool_trajectory":["web_search","summarize_text"]})");
    PlannerOptions opts;
    opts.debaters = 2;
    opts.schedule = {1, 0, 1};
    auto plan = plan_debate("q", earthagent_catalog(), b, opts);
    CHECK(plan.metric_path() == ToolPath{"web_search", "summarize_text"});
    CHECK(b.calls() == 3);
  }

  TEST_CASE("debate call count follows the schedule") {
    ScriptedBackend b;
    b.otherwise(R"({"tool_trajectory":["web_search"]})");
    auto plan = plan_debate("q", earthagent_catalog(), b);
    CHECK(b.calls() == 10);
    CHECK(plan.trace.size() == 10);

    ScriptedBackend bad_judge;
    bad_judge.on_contains("judge/summarizer", "no idea");
    bad_judge.otherwise(R"({"tool_trajectory":["web_search"]})");
    CHECK(code_of([&] { plan_debate("q", earthagent_catalog(), bad_judge); }) == ErrorCode::kUnparseableSelection);
  }

  TEST_CASE("debate keeps a debater's previous answer on a parse failure") {
    ScriptedBackend b;
    b.on_contains("In this initial round", R"({"initial_tool_trajectory":["web_search"]})");
    b.on_contains("debater participating", "pass");
    b.on_contains("judge/summarizer", R"({"final_tool_trajectory":["web_search"]})");
    auto plan = plan_debate("q", earthagent_catalog(), b);
    CHECK(plan.has_flag("debater_unparseable:1:round1"));
  }

  TEST_CASE("name list extraction") {
    CHECK(parse_name_list("['a','b']") == std::vector<std::string>{"a", "b"});
    CHECK(parse_name_list("{\"tools\": [\"x\"]} and that is all.") == std::vector<std::string>{"x"});
    CHECK(parse_name_list(R"({"final_tool_trajectory":["p","q"]})") == std::vector<std::string>{"p", "q"});
    CHECK_THROWS_AS(parse_name_list("no list here"), Error);
  }

  TEST_CASE("keyword mock plans satisfy the layer-order invariant") {
    KeywordRoutingBackend mock;
    for (const auto& t : load_tasks(fixture("tasks10.jsonl"))) {
      auto plan = plan_htam(t.question, earthagent_registry(), mock);
      CHECK(layer_order_holds(plan));
      CHECK_FALSE(plan.steps.empty());
    }
  }

  TEST_CASE("transport failures become planning failures") {
    ScriptedBackend b;
    b.otherwise([](std::string_view) -> std::string { throw Error(ErrorCode::kTransport, "down"); });
    CHECK(code_of([&] { plan_htam("q", earthagent_registry(), b); }) == ErrorCode::kPlanningFailed);
    auto react = plan_react("q", earthagent_catalog(), b);
    CHECK(react.has_flag("transport_error"));
  }

  TEST_CASE("run_planner dispatch") {
    CHECK(is_planner_architecture("htam"));
    CHECK(is_planner_architecture("plan_execute"));
    CHECK_FALSE(is_planner_architecture("external"));
    KeywordRoutingBackend mock;
    CHECK_THROWS_AS(run_planner("nope", "q", earthagent_registry(), mock), Error);
  }
}
