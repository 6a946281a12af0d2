#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "htam/backend.hpp"
#include "htam/graph.hpp"
#include "json.hpp"

namespace htam {

struct ExpectedScores {
  double a = 0.5;
  double b = 0.5;
};

ExpectedScores elo_expected(double r_a, double r_b);

// Returns updated (r_a, r_b); s_a in {1, 0.5, 0}.
std::pair<double, double> elo_update(double r_a, double r_b, double s_a, double k);

enum class Verdict { kA, kB, kTie };

// Trim, strip quotes, case-fold; accepts exactly "a", "b", "tie".
// Throws Error(kJudgeProtocolError) otherwise.
Verdict parse_verdict(std::string_view raw);
double score_of(Verdict v);
std::string_view to_string(Verdict v);

struct Battle {
  std::string task_id;
  std::string a;
  std::string b;
  std::string verdict;  // "A", "B", "Tie", or "" when skipped
  double r_a_after = 0.0;
  double r_b_after = 0.0;
  bool skipped = false;
  std::string note;  // skip reason

  nlohmann::json to_json() const;
};

struct EloState {
  std::map<std::string, double> ratings;
  double k = 32.0;
  double initial = 1000.0;
  std::vector<Battle> history;

  EloState() = default;
  EloState(const std::vector<std::string>& agents, double k, double initial);

  double total() const;
  std::size_t skipped() const;
  // Applies one verdict, or logs a skip when `verdict` is empty.
  const Battle& apply(const std::string& task_id, const std::string& a, const std::string& b,
                      std::optional<Verdict> verdict, std::string note = {});
  std::string battle_log_jsonl() const;
};

struct Matchup {
  std::string task_id;
  std::string a;
  std::string b;
};

struct TournamentTask {
  std::string task_id;
  std::string question;
};

// agent -> task_id -> tool path
using PlanTable = std::map<std::string, std::map<std::string, ToolPath>>;

struct TournamentOptions {
  double k = 32.0;
  double initial = 1000.0;
  std::optional<std::uint64_t> order_seed;  // shuffle battles when set
  int fetch_workers = 1;
  DecodingParams decoding;
  std::string model;
  std::function<void(const EloState&, const Battle&)> observer;
};

// Tasks in input order, agent pairs (a < b) lexicographically; a seeded
// Fisher-Yates shuffle (mt19937_64) when order_seed is set.
std::vector<Matchup> schedule_battles(const std::vector<TournamentTask>& tasks, const std::vector<std::string>& agents,
                                      std::optional<std::uint64_t> order_seed = std::nullopt);

struct VerdictRecord {
  Matchup matchup;
  std::string raw;
  std::optional<Verdict> verdict;
  std::string note;
};

// Asks the judge for every matchup; may run concurrently. Results keep the
// matchup order.
std::vector<VerdictRecord> collect_verdicts(const std::vector<Matchup>& matchups,
                                            const std::vector<TournamentTask>& tasks, const PlanTable& plans,
                                            CompletionBackend& judge, const TournamentOptions& options = {});

// Sequential application in record order.
EloState apply_verdicts(const std::vector<VerdictRecord>& records, const std::vector<std::string>& agents,
                        const TournamentOptions& options = {});

EloState run_tournament(const PlanTable& plans, const std::vector<TournamentTask>& tasks, CompletionBackend& judge,
                        const TournamentOptions& options = {});

}  // namespace htam
