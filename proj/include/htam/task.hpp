#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "htam/graph.hpp"
#include "json.hpp"

namespace htam {

inline const std::vector<std::string>& complexity_levels() {
  static const std::vector<std::string> kLevels{"Simple", "Medium", "Complex"};
  return kLevels;
}

struct ParameterizedStep {
  std::string tool;
  nlohmann::json params = nlohmann::json::object();
};

// One benchmark task; JSONL field names match the members.
struct TaskRecord {
  std::string task_id;
  std::string question;
  std::string domain;
  std::string complexity;
  ToolPath ground_truth;
  std::vector<ParameterizedStep> parameterized;
  std::optional<std::vector<std::string>> key_steps;

  // Throws Error(kInvalidArgument) on an empty ground truth or unknown
  // complexity. `domains` empty means any domain is accepted.
  void validate(const std::vector<std::string>& domains = {}) const;

  nlohmann::json to_json() const;
  static TaskRecord from_json(const nlohmann::json& j);
};

std::vector<TaskRecord> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, const std::vector<TaskRecord>& tasks);
std::string tasks_to_jsonl(const std::vector<TaskRecord>& tasks);

}  // namespace htam
