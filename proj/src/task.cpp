#include "htam/task.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "htam/error.hpp"

namespace htam {

using nlohmann::json;

void TaskRecord::validate(const std::vector<std::string>& domains) const {
  if (task_id.empty()) throw Error(ErrorCode::kInvalidArgument, "task without task_id");
  if (ground_truth.empty()) throw Error(ErrorCode::kInvalidArgument, "task " + task_id + " has empty ground_truth");
  const auto& levels = complexity_levels();
  if (std::find(levels.begin(), levels.end(), complexity) == levels.end()) {
    throw Error(ErrorCode::kInvalidArgument, "task " + task_id + " has unknown complexity " + complexity);
  }
  if (!domains.empty() && std::find(domains.begin(), domains.end(), domain) == domains.end()) {
    throw Error(ErrorCode::kInvalidArgument, "task " + task_id + " has unknown domain " + domain);
  }
}

json TaskRecord::to_json() const {
  json params = json::array();
  for (const auto& p : parameterized) params.push_back({{"tool", p.tool}, {"params", p.params}});
  json j = {{"task_id", task_id},       {"question", question},         {"domain", domain},
            {"complexity", complexity}, {"ground_truth", ground_truth}, {"parameterized", params}};
  j["key_steps"] = key_steps ? json(*key_steps) : json(nullptr);
  return j;
}

TaskRecord TaskRecord::from_json(const json& j) {
  try {
    TaskRecord t;
    t.task_id = j.at("task_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.domain = j.value("domain", std::string{});
    t.complexity = j.at("complexity").get<std::string>();
    t.ground_truth = j.at("ground_truth").get<ToolPath>();
    if (auto it = j.find("parameterized"); it != j.end() && it->is_array()) {
      for (const auto& p : *it) {
        t.parameterized.push_back({p.at("tool").get<std::string>(), p.value("params", json::object())});
      }
    }
    if (auto it = j.find("key_steps"); it != j.end() && it->is_array()) {
      t.key_steps = it->get<std::vector<std::string>>();
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("task record: ") + e.what());
  }
}

std::vector<TaskRecord> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<TaskRecord> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(lineno) + ": malformed JSON");
    }
    tasks.push_back(TaskRecord::from_json(j));
  }
  return tasks;
}

std::string tasks_to_jsonl(const std::vector<TaskRecord>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += t.to_json().dump() + "\n";
  return out;
}

void save_tasks(const std::filesystem::path& path, const std::vector<TaskRecord>& tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << tasks_to_jsonl(tasks);
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace htam
