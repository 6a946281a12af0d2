#include "htam/benchgen.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <random>
#include <thread>

#include "htam/assets.hpp"
#include "htam/error.hpp"
#include "htam/parse.hpp"
#include "htam/prompts.hpp"

namespace htam {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string tool_details(const ToolCatalog& catalog, const ToolPath& tools) {
  std::string out;
  for (const auto& name : tools) {
    const ToolSpec* t = catalog.find(name);
    out += "- " + name + ": " + (t ? t->description : std::string("(no description)"));
    if (t && !t->params.empty()) {
      out += " Parameters: ";
      for (std::size_t i = 0; i < t->params.size(); ++i) {
        if (i) out += ", ";
        out += t->params[i].name + " (" + t->params[i].type + (t->params[i].required ? ", required)" : ")");
      }
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> template_violations(const DependencyGraph& g, const ToolCatalog& catalog) {
  std::vector<std::string> out;
  if (g.nodes.empty()) out.push_back("graph has no nodes");
  for (const auto& v : validate_dag(g).violations) out.push_back(v.message);
  for (const auto& n : g.nodes) {
    if (!catalog.contains(n)) out.push_back("unknown tool " + n);
  }
  return out;
}

}  // namespace

DomainTable DomainTable::from_json(const json& j) {
  try {
    DomainTable t;
    t.domains = j.at("domains").get<std::vector<std::string>>();
    t.descriptions = j.value("descriptions", std::map<std::string, std::string>{});
    for (const auto& [domain, words] : j.at("keywords").items()) {
      auto& list = t.keywords[domain];
      for (const auto& w : words) list.push_back(lower(w.get<std::string>()));
      if (list.empty()) throw Error(ErrorCode::kInvalidArgument, "empty keyword list for " + domain);
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("domain table: ") + e.what());
  }
}

DomainTable DomainTable::bundled() {
  static const DomainTable kTable = from_json(json::parse(asset("domains/domains.json")));
  return kTable;
}

ComplexityBands default_complexity_bands() {
  return {{"Simple", {3, 6}}, {"Medium", {6, 10}}, {"Complex", {10, 16}}};
}

std::map<std::string, std::string> default_tools_number_ranges() {
  return {{"Simple", "5-8"}, {"Medium", "8-12"}, {"Complex", "12-18"}};
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kComplexity: return "complexity";
    case Stage::kRelevance: return "relevance";
    case Stage::kDedup: return "dedup";
  }
  return "unknown";
}

DependencyGraph generate_dependency_template(const std::string& domain, const std::string& complexity,
                                             const ToolCatalog& catalog, CompletionBackend& backend,
                                             const DomainTable& domains, const std::string& tools_number_range,
                                             const GenerationOptions& options) {
  if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tool catalog");
  std::string range = tools_number_range;
  if (range.empty()) {
    auto defaults = default_tools_number_ranges();
    range = defaults.count(complexity) ? defaults[complexity] : "5-8";
  }
  auto desc = domains.descriptions.find(domain);
  const std::string prompt =
      render_prompt("dag_template", {{"domain", domain},
                                     {"domain_desc", desc == domains.descriptions.end() ? domain : desc->second},
                                     {"tools_number_range", range},
                                     {"tools_str", catalog.render_for_prompt()}});
  std::string current = prompt;
  std::string last_problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response = ask(backend, current, options.decoding, options.model);
    std::vector<std::string> problems;
    DependencyGraph g;
    auto j = extract_json(response);
    if (!j || !j->is_object()) {
      problems.push_back("output is not a JSON object");
    } else {
      try {
        g = DependencyGraph::from_json(*j);
        if (g.domain.empty()) g.domain = domain;
        problems = template_violations(g, catalog);
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
    if (problems.empty()) return g;
    last_problem.clear();
    for (const auto& p : problems) last_problem += (last_problem.empty() ? "" : "; ") + p;
    current = prompt + "\n\nYour previous answer was rejected: " + last_problem +
              ". Return a corrected acyclic graph using only the listed tools.";
  }
  throw Error(ErrorCode::kInvalidTemplate, domain + "/" + complexity + ": " + last_problem);
}

std::vector<ParameterizedStep> parameterize_path(const ToolPath& path, const ToolCatalog& catalog,
                                                 CompletionBackend& backend, const GenerationOptions& options,
                                                 std::vector<std::string>* warnings) {
  const std::string prompt =
      render_prompt("parameterize_flow", {{"tools", json(path).dump()}, {"tools_str", tool_details(catalog, path)}});
  const std::string response = ask(backend, prompt, options.decoding, options.model);
  auto j = extract_json(response);
  const json* items = nullptr;
  if (j && j->is_object()) {
    if (auto it = j->find("parameterized_tools"); it != j->end() && it->is_array()) items = &*it;
  } else if (j && j->is_array()) {
    items = &*j;
  }
  if (!items) throw Error(ErrorCode::kParameterizationMismatch, "no parameterized_tools list in output");

  std::vector<ParameterizedStep> steps;
  for (const auto& item : *items) {
    if (!item.is_object() || !item.contains("tool") || !item["tool"].is_string()) {
      throw Error(ErrorCode::kParameterizationMismatch, "parameterized entry without a tool name");
    }
    ParameterizedStep step{normalize_token(item["tool"].get<std::string>()), json::object()};
    json params = item.value("params", item.value("parameters", json::object()));
    const ToolSpec* spec = catalog.find(step.tool);
    if (params.is_object()) {
      for (const auto& [k, v] : params.items()) {
        if (spec && !spec->has_param(k)) {
          if (warnings) warnings->push_back("dropped undeclared parameter " + k + " of " + step.tool);
          continue;
        }
        step.params[k] = v;
      }
    }
    steps.push_back(std::move(step));
  }
  ToolPath got;
  for (const auto& s : steps) got.push_back(s.tool);
  if (got != path) {
    throw Error(ErrorCode::kParameterizationMismatch,
                "expected " + json(path).dump() + " but backend returned " + json(got).dump());
  }
  return steps;
}

Question normalize_question(std::string_view raw) {
  std::string text(raw);
  // First non-empty line.
  std::size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) return {};
  std::size_t nl = text.find('\n', start);
  bool truncated = false;
  if (nl != std::string::npos) {
    truncated = text.find_first_not_of(" \t\r\n", nl) != std::string::npos;
    text = text.substr(start, nl - start);
  } else {
    text = text.substr(start);
  }
  for (std::string_view label : {"Question:", "question:", "**Question:**"}) {
    if (text.rfind(label, 0) == 0) text = text.substr(label.size());
  }
  text = normalize_token(text);
  // Cut after the first sentence terminator followed by whitespace.
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if ((c == '.' || c == '?' || c == '!') && i + 1 < text.size() && std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      if (text.find_first_not_of(" \t\r", i + 1) != std::string::npos) truncated = true;
      text.resize(i + 1);
      break;
    }
  }
  // normalize_token strips a trailing period; restore a terminator.
  if (!text.empty() && text.back() != '?' && text.back() != '.' && text.back() != '!') text.push_back('.');
  return {text, truncated};
}

Question formulate_question(const std::vector<ParameterizedStep>& steps, CompletionBackend& backend,
                            const GenerationOptions& options) {
  std::string flow;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    flow += std::to_string(i + 1) + ". " + steps[i].tool + "(" + steps[i].params.dump() + ")\n";
  }
  const std::string response = ask(backend, render_prompt("generate_task", {{"flow_str", flow}}), options.decoding,
                                   options.model);
  Question q = normalize_question(response);
  if (q.text.empty() || q.text == "." ) throw Error(ErrorCode::kEmptyQuestion, "backend returned no question");
  return q;
}

ValidationOutcome verify_complexity(const TaskRecord& task, const ComplexityBands& bands) {
  auto it = bands.find(task.complexity);
  if (it == bands.end()) return {Stage::kComplexity, false, "no band for complexity " + task.complexity};
  const std::size_t n = task.ground_truth.size();
  const bool ok = n >= it->second.min_len && n <= it->second.max_len;
  return {Stage::kComplexity, ok,
          "path length " + std::to_string(n) + " vs " + task.complexity + " band " +
              std::to_string(it->second.min_len) + "-" + std::to_string(it->second.max_len)};
}

ValidationOutcome check_domain_relevance(const TaskRecord& task, const DomainTable& table, int min_hits,
                                         const RelevanceClassifier& classifier) {
  auto it = table.keywords.find(task.domain);
  if (it == table.keywords.end()) return {Stage::kRelevance, false, "no keyword list for domain " + task.domain};
  const std::string q = lower(task.question);
  int hits = 0;
  for (const auto& kw : it->second) {
    if (q.find(kw) != std::string::npos) ++hits;
  }
  if (hits < min_hits) {
    return {Stage::kRelevance, false, std::to_string(hits) + " keyword hits, need " + std::to_string(min_hits)};
  }
  if (classifier && !classifier(task)) return {Stage::kRelevance, false, "rejected by classifier"};
  return {Stage::kRelevance, true, std::to_string(hits) + " keyword hits"};
}

DedupResult deduplicate(const std::vector<TaskRecord>& tasks, EmbeddingProvider& embedder, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be in (0,1]");
  std::vector<std::string> questions;
  for (const auto& t : tasks) questions.push_back(t.question);
  std::vector<Vector> vecs;
  try {
    vecs = embedder.embed(questions);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kProviderFailure, std::string("dedup embedding failed: ") + e.what());
  }
  if (vecs.size() != tasks.size()) throw Error(ErrorCode::kProviderFailure, "embedder returned wrong batch size");

  DedupResult result;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::optional<DuplicatePair> dup;
    for (std::size_t k : kept) {
      const double sim = dot(vecs[i], vecs[k]);
      if (vecs[i] == vecs[k] || sim > threshold) {
        dup = DuplicatePair{tasks[i].task_id, tasks[k].task_id, sim};
        break;
      }
    }
    if (dup) {
      result.removed.push_back(*dup);
    } else {
      kept.push_back(i);
      result.retained.push_back(tasks[i]);
    }
  }
  return result;
}

std::string seeded_uuid(std::uint64_t seed, std::uint64_t counter) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + counter);
  std::uint64_t hi = rng(), lo = rng();
  hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xFFFF), static_cast<unsigned>(hi & 0xFFFF),
                static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return buf;
}

json PipelineReport::to_json() const {
  json removed = json::array();
  for (const auto& r : removals) {
    removed.push_back({{"task_id", r.task_id}, {"stage", std::string(htam::to_string(r.stage))}, {"detail", r.detail}});
  }
  return {{"generated", generated},
          {"removed_complexity", removed_complexity},
          {"removed_relevance", removed_relevance},
          {"removed_dedup", removed_dedup},
          {"retained", retained},
          {"failures", failures},
          {"audit", audit},
          {"removals", removed}};
}

namespace {

struct Unit {
  std::string domain;
  std::string complexity;
  std::uint64_t index = 0;
};

struct UnitOutput {
  std::vector<TaskRecord> candidates;  // task_id assigned later
  std::vector<std::string> failures;
  std::vector<std::string> audit;
};

UnitOutput run_unit(const Unit& unit, const BenchConfig& cfg, const ToolCatalog& catalog, CompletionBackend& backend,
                    const DomainTable& domains) {
  UnitOutput out;
  const std::string tag = unit.domain + "/" + unit.complexity;
  DependencyGraph graph;
  try {
    auto range = cfg.tools_number_ranges.find(unit.complexity);
    graph = generate_dependency_template(unit.domain, unit.complexity, catalog, backend, domains,
                                         range == cfg.tools_number_ranges.end() ? std::string{} : range->second,
                                         cfg.generation);
  } catch (const std::exception& e) {
    out.failures.push_back("template " + tag + ": " + e.what());
    return out;
  }
  auto paths = enumerate_paths(graph, cfg.path_limits);
  if (paths.empty()) {
    out.failures.push_back("template " + tag + ": no source-to-sink path");
    return out;
  }
  std::mt19937_64 rng(cfg.seed ^ (unit.index * 0xD1B54A32D192ED03ULL + 1));
  const std::size_t offset = static_cast<std::size_t>(rng() % paths.size());
  for (int q = 0; q < cfg.tasks_per_unit; ++q) {
    const ToolPath& path = paths[(offset + static_cast<std::size_t>(q)) % paths.size()];
    try {
      std::vector<std::string> warnings;
      auto steps = parameterize_path(path, catalog, backend, cfg.generation, &warnings);
      Question question = formulate_question(steps, backend, cfg.generation);
      TaskRecord t;
      t.question = question.text;
      t.domain = unit.domain;
      t.complexity = unit.complexity;
      t.ground_truth = path;
      t.parameterized = std::move(steps);
      if (question.truncated) out.audit.push_back("truncated question in " + tag);
      for (auto& w : warnings) out.audit.push_back(tag + ": " + w);
      out.candidates.push_back(std::move(t));
    } catch (const std::exception& e) {
      out.failures.push_back("task " + tag + " #" + std::to_string(q + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

BenchResult build_benchmark(const BenchConfig& config, const ToolCatalog& catalog, CompletionBackend& backend,
                            EmbeddingProvider& embedder, const DomainTable& domains) {
  if (config.tasks_per_unit < 1) throw Error(ErrorCode::kInvalidArgument, "tasks_per_unit must be >= 1");
  const auto& dom_list = config.domains.empty() ? domains.domains : config.domains;
  const auto& cx_list = config.complexities.empty() ? complexity_levels() : config.complexities;
  std::vector<Unit> units;
  for (const auto& d : dom_list) {
    for (const auto& c : cx_list) units.push_back({d, c, units.size()});
  }

  std::vector<UnitOutput> outputs(units.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, config.workers));
  if (workers == 1) {
    for (std::size_t i = 0; i < units.size(); ++i) outputs[i] = run_unit(units[i], config, catalog, backend, domains);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, units.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < units.size(); i = next++) {
          outputs[i] = run_unit(units[i], config, catalog, backend, domains);
        }
      });
    }
  }

  BenchResult result;
  PipelineReport& report = result.report;
  std::vector<TaskRecord> candidates;
  std::uint64_t counter = 0;
  for (auto& out : outputs) {
    for (auto& t : out.candidates) {
      t.task_id = seeded_uuid(config.seed, counter++);
      candidates.push_back(std::move(t));
    }
    report.failures.insert(report.failures.end(), out.failures.begin(), out.failures.end());
    report.audit.insert(report.audit.end(), out.audit.begin(), out.audit.end());
  }
  report.generated = candidates.size();

  std::vector<TaskRecord> stage1;
  for (auto& t : candidates) {
    auto o = verify_complexity(t, config.bands);
    if (o.passed) {
      stage1.push_back(std::move(t));
    } else {
      ++report.removed_complexity;
      report.removals.push_back({t.task_id, Stage::kComplexity, o.detail});
    }
  }
  std::vector<TaskRecord> stage2;
  for (auto& t : stage1) {
    auto o = check_domain_relevance(t, domains, config.min_keyword_hits, config.classifier);
    if (o.passed) {
      stage2.push_back(std::move(t));
    } else {
      ++report.removed_relevance;
      report.removals.push_back({t.task_id, Stage::kRelevance, o.detail});
    }
  }
  DedupResult dedup = deduplicate(stage2, embedder, config.dedup_threshold);
  for (const auto& d : dedup.removed) {
    ++report.removed_dedup;
    report.removals.push_back({d.removed, Stage::kDedup, "similar to " + d.kept + " (" + std::to_string(d.similarity) + ")"});
  }
  result.tasks = std::move(dedup.retained);
  report.retained = result.tasks.size();
  return result;
}

}  // namespace htam
