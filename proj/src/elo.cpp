#include "htam/elo.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <random>
#include <thread>

#include "htam/error.hpp"
#include "htam/prompts.hpp"

namespace htam {

ExpectedScores elo_expected(double r_a, double r_b) {
  const double e_a = 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
  return {e_a, 1.0 - e_a};
}

std::pair<double, double> elo_update(double r_a, double r_b, double s_a, double k) {
  const auto e = elo_expected(r_a, r_b);
  const double delta = k * (s_a - e.a);
  // B's change is exactly -delta since s_b - e_b = -(s_a - e_a).
  return {r_a + delta, r_b - delta};
}

Verdict parse_verdict(std::string_view raw) {
  auto is_strip = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '`';
  };
  std::size_t b = 0, e = raw.size();
  while (b < e && is_strip(raw[b])) ++b;
  while (e > b && is_strip(raw[e - 1])) --e;
  std::string s;
  for (std::size_t i = b; i < e; ++i) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  if (s == "a") return Verdict::kA;
  if (s == "b") return Verdict::kB;
  if (s == "tie") return Verdict::kTie;
  throw Error(ErrorCode::kJudgeProtocolError, "unrecognized verdict '" + std::string(raw) + "'");
}

double score_of(Verdict v) {
  switch (v) {
    case Verdict::kA: return 1.0;
    case Verdict::kB: return 0.0;
    case Verdict::kTie: return 0.5;
  }
  return 0.5;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kA: return "A";
    case Verdict::kB: return "B";
    case Verdict::kTie: return "Tie";
  }
  return "Tie";
}

nlohmann::json Battle::to_json() const {
  nlohmann::json j = {{"task_id", task_id}, {"a", a},   {"b", b}, {"verdict", verdict},
                      {"r_a_after", r_a_after}, {"r_b_after", r_b_after}};
  if (skipped) {
    j["skipped"] = true;
    j["note"] = note;
  }
  return j;
}

EloState::EloState(const std::vector<std::string>& agents, double k_factor, double initial_rating)
    : k(k_factor), initial(initial_rating) {
  if (k <= 0.0) throw Error(ErrorCode::kInvalidArgument, "K-factor must be positive");
  for (const auto& a : agents) ratings.emplace(a, initial);
}

double EloState::total() const {
  double s = 0.0;
  for (const auto& [_, r] : ratings) s += r;
  return s;
}

std::size_t EloState::skipped() const {
  return static_cast<std::size_t>(std::count_if(history.begin(), history.end(), [](const Battle& b) { return b.skipped; }));
}

const Battle& EloState::apply(const std::string& task_id, const std::string& a, const std::string& b,
                              std::optional<Verdict> verdict, std::string note) {
  double& ra = ratings.try_emplace(a, initial).first->second;
  double& rb = ratings.try_emplace(b, initial).first->second;
  Battle battle{task_id, a, b, "", ra, rb, true, std::move(note)};
  if (verdict) {
    auto [na, nb] = elo_update(ra, rb, score_of(*verdict), k);
    ra = na;
    rb = nb;
    battle.verdict = std::string(to_string(*verdict));
    battle.r_a_after = na;
    battle.r_b_after = nb;
    battle.skipped = false;
  }
  history.push_back(std::move(battle));
  return history.back();
}

std::string EloState::battle_log_jsonl() const {
  std::string out;
  for (const auto& b : history) out += b.to_json().dump() + "\n";
  return out;
}

std::vector<Matchup> schedule_battles(const std::vector<TournamentTask>& tasks, const std::vector<std::string>& agents,
                                      std::optional<std::uint64_t> order_seed) {
  std::vector<std::string> sorted = agents;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Matchup> out;
  for (const auto& t : tasks) {
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      for (std::size_t j = i + 1; j < sorted.size(); ++j) out.push_back({t.task_id, sorted[i], sorted[j]});
    }
  }
  if (order_seed) {
    std::mt19937_64 rng(*order_seed);
    for (std::size_t i = out.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(out[i - 1], out[j]);
    }
  }
  return out;
}

namespace {

const ToolPath& plan_of(const PlanTable& plans, const std::string& agent, const std::string& task) {
  static const ToolPath kEmpty;
  auto it = plans.find(agent);
  if (it == plans.end()) return kEmpty;
  auto jt = it->second.find(task);
  return jt == it->second.end() ? kEmpty : jt->second;
}

VerdictRecord judge_one(const Matchup& m, const std::string& question, const PlanTable& plans,
                        CompletionBackend& judge, const TournamentOptions& options) {
  VerdictRecord rec{m, {}, std::nullopt, {}};
  const std::string prompt =
      render_prompt("completeness_evaluation", {{"question", question},
                                                {"agent_a", m.a},
                                                {"agent_b", m.b},
                                                {"tool_flow_a", nlohmann::json(plan_of(plans, m.a, m.task_id)).dump()},
                                                {"tool_flow_b", nlohmann::json(plan_of(plans, m.b, m.task_id)).dump()}});
  try {
    rec.raw = ask(judge, prompt, options.decoding, options.model);
    rec.verdict = parse_verdict(rec.raw);
  } catch (const std::exception& e) {
    rec.note = e.what();
  }
  return rec;
}

}  // namespace

std::vector<VerdictRecord> collect_verdicts(const std::vector<Matchup>& matchups,
                                            const std::vector<TournamentTask>& tasks, const PlanTable& plans,
                                            CompletionBackend& judge, const TournamentOptions& options) {
  std::map<std::string, std::string> questions;
  for (const auto& t : tasks) questions.emplace(t.task_id, t.question);
  std::vector<VerdictRecord> out(matchups.size());
  auto work = [&](std::size_t i) {
    auto q = questions.find(matchups[i].task_id);
    out[i] = judge_one(matchups[i], q == questions.end() ? std::string{} : q->second, plans, judge, options);
  };

  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.fetch_workers));
  if (workers == 1 || matchups.size() < 2) {
    for (std::size_t i = 0; i < matchups.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, matchups.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < matchups.size(); i = next++) work(i);
    });
  }
  pool.clear();
  return out;
}

EloState apply_verdicts(const std::vector<VerdictRecord>& records, const std::vector<std::string>& agents,
                        const TournamentOptions& options) {
  EloState state(agents, options.k, options.initial);
  for (const auto& r : records) {
    const Battle& b = state.apply(r.matchup.task_id, r.matchup.a, r.matchup.b, r.verdict, r.note);
    if (options.observer) options.observer(state, b);
  }
  return state;
}

EloState run_tournament(const PlanTable& plans, const std::vector<TournamentTask>& tasks, CompletionBackend& judge,
                        const TournamentOptions& options) {
  std::vector<std::string> agents;
  for (const auto& [name, _] : plans) agents.push_back(name);
  auto matchups = schedule_battles(tasks, agents, options.order_seed);
  return apply_verdicts(collect_verdicts(matchups, tasks, plans, judge, options), agents, options);
}

}  // namespace htam
