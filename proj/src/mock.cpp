#include "htam/mock.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "htam/embedding.hpp"
#include "htam/parse.hpp"
#include "json.hpp"

namespace htam {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>>& agent_keywords() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> kTable = {
      {"AgriScoutAgent", {"crop", "agricultur", "farm", "yield", "harvest", "pasture", "soil", "plant disease", "irrigat"}},
      {"CrisisCommanderAgent",
       {"flood", "disaster", "earthquake", "wildfire", "fire", "landslide", "damage", "evacuat", "drought", "emergency",
        "hurricane", "recovery"}},
      {"UrbanistAIAgent",
       {"urban", "city", "cities", "traffic", "road", "population", "green space", "land use", "infrastructure",
        "housing"}},
      {"EnvironmentalistAgent",
       {"pollut", "deforest", "forest", "carbon", "biodiversity", "wetland", "environment", "air quality", "logging",
        "ecosystem", "climate"}},
      {"GeologistAgent", {"geolog", "fault", "slope", "rock", "terrain", "litholog", "tectonic"}},
      {"MinerAgent", {"mine", "mining", "ore ", "mineral", "quarry"}},
      {"OceanographerAgent",
       {"coast", "ocean", "marine", "sea ", "shoreline", "algae", "algal", "fishing", "sea ice", "water quality", "tide",
        "estuar"}},
      {"DefenseSecurityAgent", {"military", "defense", "defence", "security", "airspace", "threat", "surveillance"}},
      {"ChangeDetectorAgent",
       {"change", "trend", "between", "over time", "expansion", "erosion", "loss", "growth", "since", "years",
        "multi-temporal", "evolution"}},
      {"SemanticSegmentorAgent",
       {"land cover", "segment", "water bod", "shoreline", "vegetation", "coast", "extent", "map", "area"}},
      {"ObjectDetectorAgent", {"ship", "vessel", "building", "road", "facilit", "count", "aircraft", "vehicle"}},
      {"SceneClassifierAgent", {"landscape", "terrain", "scene", "urbanization"}},
      {"InstanceSegmentorAgent", {"individual", "instance", "footprint"}},
      {"ImageGeneratorAgent", {"resolution", "inpaint", "enhance", "sharpen"}},
  };
  return kTable;
}

const std::set<std::string>& generic_tokens() {
  static const std::set<std::string> kTokens = {
      "data",     "analysis", "analyze",  "assess",   "monitor",  "detect",   "calculate", "image",
      "imagery",  "get",      "download", "segment",  "classify", "evaluate", "track",     "predict",
      "generate", "perform",  "quantify", "extract",  "reports",  "the",      "and",       "of",
      "type",     "level",    "patterns", "file",     "time",     "text",     "current",   "conditions",
      "individual", "changes", "progress", "distribution", "suggest", "recommend", "read", "format"};
  return kTokens;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool stem_match(const std::string& a, const std::string& b) {
  if (a == b) return true;
  if (a.size() < 5 || b.size() < 5) return false;
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n >= 5;
}

std::string capture(std::string_view text, const std::regex& re, int group = 1) {
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(text.begin(), text.end(), m, re)) return m[group].str();
  return {};
}

std::string question_of(std::string_view prompt) {
  static const std::regex kPatterns[] = {std::regex(R"(User question: ([^\n]*))"),
                                         std::regex(R"(Task question: ([^\n]*))"),
                                         std::regex(R"(Original Question: ([^\n]*))"),
                                         std::regex(R"(Question: ([^\n]*))")};
  for (const auto& re : kPatterns) {
    std::string q = capture(prompt, re);
    if (!q.empty()) return q;
  }
  return {};
}

// Names from "- name: description" lines.
std::vector<std::string> listed_names(std::string_view text) {
  static const std::regex kLine(R"(^- ([A-Za-z][A-Za-z0-9_]*):)");
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_search(line, m, kLine)) out.push_back(m[1].str());
  }
  return out;
}

std::vector<std::string> unique_in_order(const std::vector<std::string>& xs) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& x : xs) {
    if (seen.insert(x).second) out.push_back(x);
  }
  return out;
}

// JSON list following `label` in the prompt.
std::vector<std::string> list_after(std::string_view prompt, std::string_view label) {
  std::size_t at = prompt.find(label);
  if (at == std::string_view::npos) return {};
  std::size_t open = prompt.find('[', at);
  std::size_t close = prompt.find(']', open);
  if (open == std::string_view::npos || close == std::string_view::npos) return {};
  json j = json::parse(prompt.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_array()) return {};
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (x.is_string()) out.push_back(x.get<std::string>());
  }
  return out;
}

int agent_score(const std::string& agent, const std::string& question_lc) {
  for (const auto& [name, words] : agent_keywords()) {
    if (!iequals(name, agent)) continue;
    int s = 0;
    for (const auto& w : words) s += question_lc.find(w) != std::string::npos ? 1 : 0;
    return s;
  }
  return 0;
}

std::string find_listed(const std::vector<std::string>& listed, std::string_view name) {
  for (const auto& l : listed) {
    if (iequals(l, name)) return l;
  }
  return {};
}

json choice(const std::string& name, const std::string& question) {
  return {{"name", name}, {"subtask", "Handle the part of '" + question + "' that " + name + " covers."}};
}

std::string select_top(std::string_view prompt) {
  const std::string q = question_of(prompt);
  const std::string qlc = lower(q);
  const auto listed = listed_names(prompt);
  std::string best;
  int best_score = 0;
  for (const auto& a : listed) {
    int s = agent_score(a, qlc);
    if (s > best_score) {
      best = a;
      best_score = s;
    }
  }
  if (best.empty()) best = find_listed(listed, "GeneralChatBotAgent");
  if (best.empty() && !listed.empty()) best = listed.front();
  json j = {{"selected_agent", best}, {"subtask", "Deliver the final answer to: " + q}};
  return j.dump(4);
}

std::string select_lower(std::string_view prompt, int layer) {
  const std::string q = question_of(prompt);
  const std::string qlc = lower(q);
  const auto listed = listed_names(prompt);
  json chosen = json::array();
  if (layer == 1) {
    for (const char* pref : {"DataFetcherAgent", "PreprocessingAgent"}) {
      std::string hit = find_listed(listed, pref);
      if (!hit.empty()) chosen.push_back(choice(hit, q));
    }
  }
  if (chosen.empty()) {
    std::vector<std::pair<int, std::string>> scored;
    for (const auto& a : listed) {
      int s = agent_score(a, qlc);
      if (s > 0) scored.push_back({-s, a});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i) chosen.push_back(choice(scored[i].second, q));
  }
  if (chosen.empty() && !listed.empty()) chosen.push_back(choice(listed.front(), q));
  return json{{"selected_agents", chosen}}.dump(4);
}

std::string subagent_tools(std::string_view prompt) {
  const std::string q = question_of(prompt);
  std::size_t at = prompt.find("Your tools:");
  const auto tools = listed_names(at == std::string_view::npos ? prompt : prompt.substr(at));
  std::vector<std::string> pick;
  for (std::size_t i = 0; i < tools.size() && i < 2; ++i) pick.push_back(tools[i]);
  for (const auto& t : relevant_tools(q, tools)) pick.push_back(t);
  return json{{"tools", unique_in_order(pick)}}.dump(4);
}

std::vector<std::string> baseline_tools(std::string_view prompt, std::size_t cap) {
  const auto tools = listed_names(prompt);
  auto rel = relevant_tools(question_of(prompt), tools);
  if (rel.empty()) {
    for (std::size_t i = 0; i < tools.size() && i < 3; ++i) rel.push_back(tools[i]);
  }
  if (rel.size() > cap) rel.resize(cap);
  return rel;
}

std::string cot(std::string_view prompt) {
  std::string out;
  auto tools = baseline_tools(prompt, 6);
  for (std::size_t i = 0; i < tools.size(); ++i) {
    out += "step" + std::to_string(i + 1) + ":use " + tools[i] + " for this part of the problem;" + tools[i] + "\n";
  }
  return out;
}

std::string plan_execute(std::string_view prompt) {
  std::vector<std::string> tools;
  const auto listed = listed_names(prompt);
  if (!find_listed(listed, "download_satellite_imagery").empty()) tools.push_back("download_satellite_imagery");
  for (auto& t : baseline_tools(prompt, 5)) tools.push_back(t);
  tools = unique_in_order(tools);
  // Trailing commas, as in the prompt's own example.
  std::string out = "Here is the plan:\n{\n    \"plan\": [\n";
  for (const auto& t : tools) out += "        {\"tool\": \"" + t + "\", \"parameters\": {},},\n";
  out += "    ]\n}";
  return out;
}

std::string react_action(std::string_view prompt, const MockOptions& options) {
  std::size_t at = prompt.find("Available functions:");
  const auto tools = listed_names(at == std::string_view::npos ? prompt : prompt.substr(at));
  const auto rel = relevant_tools(question_of(prompt), tools);
  if (rel.empty()) return "FINISH";
  if (options.react_repeat) return json{{"tool", rel.front()}, {"parameters", {{"area", "study area"}}}}.dump();
  std::set<std::string> used;
  std::string prev = capture(prompt, std::regex(R"(Your previous_tool_calls: ([^\n]*))"));
  json pj = json::parse(prev, nullptr, false);
  if (pj.is_array()) {
    for (const auto& c : pj) {
      if (c.is_object() && c.contains("tool")) used.insert(c["tool"].get<std::string>());
    }
  }
  for (const auto& t : rel) {
    if (!used.count(t)) return json{{"tool", t}, {"parameters", json::object()}}.dump();
  }
  return "FINISH";
}

std::string debate_opening(std::string_view prompt) {
  return json{{"plan", "Acquire the data, process it, and analyse it."},
              {"initial_tool_trajectory", baseline_tools(prompt, 4)}}
      .dump(4);
}

std::string debate_round(std::string_view prompt) {
  auto former = list_after(prompt, "your former response:");
  for (const auto& t : baseline_tools(prompt, 8)) {
    if (std::find(former.begin(), former.end(), t) == former.end()) {
      former.push_back(t);
      break;
    }
  }
  return json{{"advice", "Cover one more required step."}, {"refined_tool_trajectory", former}}.dump(4);
}

std::string debate_judge(std::string_view prompt) {
  static const std::regex kLine(R"(Round (\d+) debater (\d+): (\[[^\n]*\]))");
  int best_round = -1;
  std::vector<std::string> best;
  std::string text(prompt);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kLine); it != std::sregex_iterator(); ++it) {
    int round = std::stoi((*it)[1].str());
    json j = json::parse((*it)[3].str(), nullptr, false);
    if (j.is_discarded()) continue;
    auto names = j.get<std::vector<std::string>>();
    if (round > best_round || (round == best_round && names.size() > best.size())) {
      best_round = round;
      best = names;
    }
  }
  return json{{"final_tool_trajectory", best}}.dump(4);
}

std::string completeness(std::string_view prompt) {
  auto a = unique_in_order(list_after(prompt, "Agent A ("));
  auto b = unique_in_order(list_after(prompt, "Agent B ("));
  if (a.size() > b.size()) return "A";
  if (b.size() > a.size()) return "B";
  return "Tie";
}

std::string dag_template(std::string_view prompt) {
  const std::string domain = capture(prompt, std::regex(R"(for remote sensing (.*) domain, represented)"));
  const std::string scope = capture(prompt, std::regex(R"(Domain application scope: ([^\n]*))"));
  int n = 5;
  std::string lo = capture(prompt, std::regex(R"(Select (\d+)-\d+ most relevant)"));
  if (!lo.empty()) n = std::max(4, std::stoi(lo));
  const auto listed = listed_names(prompt);
  static const std::vector<std::string> kBase = {"recommend_satellite_platforms", "download_satellite_imagery",
                                                 "geometric_correction",          "atmospheric_correction",
                                                 "cloud_mask_removal",            "crop_image"};
  static const std::vector<std::string> kTail = {"statistical_analysis", "format_data", "generate_analysis_reports"};
  const int n_base = std::min<int>(n / 2, static_cast<int>(kBase.size()));
  const int n_tail = std::clamp(n / 4, 1, static_cast<int>(kTail.size()));
  const int n_dom = std::max(1, n - n_base - n_tail);
  std::vector<std::string> base(kBase.begin(), kBase.begin() + n_base);
  std::vector<std::string> tail(kTail.end() - n_tail, kTail.end());
  std::set<std::string> used(base.begin(), base.end());
  used.insert(tail.begin(), tail.end());
  std::vector<std::string> dom;
  for (const auto& t : relevant_tools(domain + " " + scope, listed)) {
    if (static_cast<int>(dom.size()) < n_dom && !used.count(t)) dom.push_back(t);
  }
  for (const auto& t : listed) {
    if (static_cast<int>(dom.size()) >= n_dom) break;
    if (!used.count(t) && std::find(dom.begin(), dom.end(), t) == dom.end()) dom.push_back(t);
  }
  json nodes = json::array(), edges = json::array();
  for (const auto& t : base) nodes.push_back(t);
  for (const auto& t : dom) nodes.push_back(t);
  for (const auto& t : tail) nodes.push_back(t);
  for (std::size_t i = 1; i < base.size(); ++i) edges.push_back({base[i - 1], base[i]});
  for (const auto& d : dom) {
    if (!base.empty()) edges.push_back({base.back(), d});
    edges.push_back({d, tail.front()});
  }
  for (std::size_t i = 1; i < tail.size(); ++i) edges.push_back({tail[i - 1], tail[i]});
  return json{{"domain", domain}, {"nodes", nodes}, {"edges", edges}, {"description", "Template for " + domain}}.dump(2);
}

std::string parameterize(std::string_view prompt) {
  const auto tools = list_after(prompt, "Tool sequence:");
  json items = json::array();
  for (const auto& t : tools) {
    json params = json::object();
    std::string line = capture(prompt, std::regex("- " + t + ": [^\\n]*Parameters: ([^\\n]*)"));
    static const std::regex kParam(R"(([a-z_]+) \((\w+), required\))");
    for (auto it = std::sregex_iterator(line.begin(), line.end(), kParam); it != std::sregex_iterator(); ++it) {
      params[(*it)[1].str()] = "example_" + (*it)[1].str();
    }
    items.push_back({{"tool", t}, {"params", params}});
  }
  return json{{"parameterized_tools", items}}.dump(2);
}

std::string humanize(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string generate_task(std::string_view prompt) {
  static const std::regex kStep(R"(\d+\. ([a-z_]+)\()");
  static const std::set<std::string> kSkip = {"statistical_analysis", "format_data", "generate_analysis_reports",
                                              "recommend_satellite_platforms", "download_satellite_imagery",
                                              "geometric_correction", "atmospheric_correction", "cloud_mask_removal",
                                              "crop_image"};
  std::string text(prompt);
  std::vector<std::string> core;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kStep); it != std::sregex_iterator(); ++it) {
    if (!kSkip.count((*it)[1].str())) core.push_back((*it)[1].str());
  }
  if (core.empty()) return "How did the study region change during 2023?";
  std::string q = "For the study region in 2023, " + humanize(core.front());
  if (core.size() > 1) q += " and " + humanize(core.back());
  return q + " to support local decision makers.";
}

}  // namespace

std::vector<std::string> relevant_tools(std::string_view question, const std::vector<std::string>& listed) {
  const auto words = lexical_tokens(question);
  std::vector<std::string> out;
  for (const auto& tool : listed) {
    std::stringstream ss(tool);
    std::string tok;
    bool hit = false;
    while (!hit && std::getline(ss, tok, '_')) {
      if (tok.size() < 4 || generic_tokens().count(tok)) continue;
      for (const auto& w : words) {
        if (stem_match(tok, w)) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.push_back(tool);
  }
  return out;
}

std::string KeywordRoutingBackend::respond(std::string_view prompt, const MockOptions& options) {
  static const std::regex kChooseLayer(R"(choose layer (\d+) experts)");
  if (prompt.find("Select the most suitable third layer expert") != std::string_view::npos ||
      std::regex_search(prompt.begin(), prompt.end(), std::regex(R"(Select the most suitable layer \d+ expert)"))) {
    return select_top(prompt);
  }
  if (std::string layer = capture(prompt, kChooseLayer); !layer.empty()) return select_lower(prompt, std::stoi(layer));
  if (prompt.find("sub-agent.") != std::string_view::npos && prompt.find("Your tools:") != std::string_view::npos) {
    return subagent_tools(prompt);
  }
  if (prompt.find("stepn:thought_n;tool_n_name") != std::string_view::npos) return cot(prompt);
  if (prompt.find("create an execution plan. The plan is a tool chain") != std::string_view::npos) {
    return plan_execute(prompt);
  }
  if (prompt.find("decide the next action") != std::string_view::npos) return react_action(prompt, options);
  if (prompt.find("Please start with \"Thought: \"") != std::string_view::npos) {
    return "Thought: I should gather the next piece of evidence the question needs.";
  }
  if (prompt.find("**fully imagine**") != std::string_view::npos) return "The tool finished and returned usable results.";
  if (prompt.find("In this initial round") != std::string_view::npos) return debate_opening(prompt);
  if (prompt.find("debater participating in a multi-agent debate") != std::string_view::npos) return debate_round(prompt);
  if (prompt.find("judge/summarizer") != std::string_view::npos) return debate_judge(prompt);
  if (prompt.find("identify the key steps") != std::string_view::npos) {
    return json{{"key_steps", unique_in_order(list_after(prompt, "Ground truth tool path:"))}}.dump();
  }
  if (prompt.find("identify the key tools") != std::string_view::npos) {
    return json{{"key_tools", unique_in_order(list_after(prompt, "Agent's tool path:"))}}.dump();
  }
  if (prompt.find("compare the completeness") != std::string_view::npos) return completeness(prompt);
  if (prompt.find("Generate a typical task dependency template") != std::string_view::npos) return dag_template(prompt);
  if (prompt.find("Complete parameters for the tool flow") != std::string_view::npos) return parameterize(prompt);
  if (prompt.find("Generate a remote sensing analysis task") != std::string_view::npos) return generate_task(prompt);
  return "";
}

Completion KeywordRoutingBackend::complete(const CompletionRequest& request) {
  const std::string prompt = request.prompt_text();
  Completion c{respond(prompt, options_), {}};
  c.usage.calls = 1;
  c.usage.prompt_tokens = static_cast<long long>(prompt.size() / 4);
  c.usage.completion_tokens = static_cast<long long>(c.text.size() / 4);
  record(c.usage);
  return c;
}

}  // namespace htam
