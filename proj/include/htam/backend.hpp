#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace htam {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 2048;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model;

  static CompletionRequest from_prompt(std::string prompt, const DecodingParams& params = {},
                                       std::string model = {});
  // Concatenated message contents; what scripted matchers see.
  std::string prompt_text() const;
  nlohmann::json to_json() const;
};

struct Usage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  long long calls = 0;

  Usage& operator+=(const Usage& other);
};

struct Completion {
  std::string text;
  Usage usage;
};

// Contract every completion provider implements. Implementations must be
// safe to call from several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;

  // Aggregate usage since construction.
  Usage usage() const;

 protected:
  void record(const Usage& u);

 private:
  mutable std::mutex usage_mutex_;
  Usage usage_;
};

using BackendPtr = std::shared_ptr<CompletionBackend>;

// Convenience for the single-user-message prompts every component sends.
std::string ask(CompletionBackend& backend, const std::string& prompt, const DecodingParams& params = {},
                const std::string& model = {});

// Deterministic prompt -> response mock. Rules are tried in order; the first
// whose matcher accepts the prompt text answers.
class ScriptedBackend : public CompletionBackend {
 public:
  using Matcher = std::function<bool(std::string_view prompt)>;
  using Responder = std::function<std::string(std::string_view prompt)>;

  struct Rule {
    Matcher matcher;
    Responder responder;
  };

  ScriptedBackend() = default;

  ScriptedBackend& on(Matcher matcher, std::string response);
  ScriptedBackend& on(Matcher matcher, Responder responder);
  ScriptedBackend& on_contains(std::string needle, std::string response);
  ScriptedBackend& on_regex(const std::string& pattern, std::string response);
  ScriptedBackend& otherwise(std::string response);
  ScriptedBackend& otherwise(Responder responder);

  Completion complete(const CompletionRequest& request) override;

  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> prompts() const;

  // {"rules":[{"contains":"..."}|{"regex":"..."}, "response":"..."], "default":"..."}
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& j);
  static std::shared_ptr<ScriptedBackend> load(const std::filesystem::path& path);

 private:
  std::vector<Rule> rules_;
  Responder fallback_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex log_mutex_;
  std::vector<std::string> prompts_;
};

// Hex SHA-256 over the canonical JSON of (model, messages, decoding params).
std::string request_digest(const CompletionRequest& request);

// Read-through cache persisted as append-only JSONL {key, value, created_at}.
class CachedBackend : public CompletionBackend {
 public:
  CachedBackend(BackendPtr inner, std::filesystem::path store);

  Completion complete(const CompletionRequest& request) override;

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  BackendPtr inner_;
  std::filesystem::path store_;
  std::mutex mutex_;
  std::map<std::string, std::string> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

BackendPtr cache_wrap(BackendPtr backend, const std::filesystem::path& store);

}  // namespace htam
