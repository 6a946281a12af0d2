#include "htam/backend.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "htam/error.hpp"

namespace htam {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

CompletionRequest CompletionRequest::from_prompt(std::string prompt, const DecodingParams& params,
                                                 std::string model) {
  CompletionRequest r;
  r.messages.push_back({Role::kUser, std::move(prompt)});
  r.temperature = params.temperature;
  r.max_tokens = params.max_tokens;
  r.model = std::move(model);
  return r;
}

std::string CompletionRequest::prompt_text() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n";
    out += m.content;
  }
  return out;
}

nlohmann::json CompletionRequest::to_json() const {
  auto msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return {{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}};
}

Usage& Usage::operator+=(const Usage& other) {
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  calls += other.calls;
  return *this;
}

Usage CompletionBackend::usage() const {
  std::lock_guard lock(usage_mutex_);
  return usage_;
}

void CompletionBackend::record(const Usage& u) {
  std::lock_guard lock(usage_mutex_);
  usage_ += u;
}

std::string ask(CompletionBackend& backend, const std::string& prompt, const DecodingParams& params,
                const std::string& model) {
  return backend.complete(CompletionRequest::from_prompt(prompt, params, model)).text;
}

ScriptedBackend& ScriptedBackend::on(Matcher matcher, std::string response) {
  return on(std::move(matcher), Responder([r = std::move(response)](std::string_view) { return r; }));
}

ScriptedBackend& ScriptedBackend::on(Matcher matcher, Responder responder) {
  rules_.push_back({std::move(matcher), std::move(responder)});
  return *this;
}

ScriptedBackend& ScriptedBackend::on_contains(std::string needle, std::string response) {
  return on([n = std::move(needle)](std::string_view p) { return p.find(n) != std::string_view::npos; },
            std::move(response));
}

ScriptedBackend& ScriptedBackend::on_regex(const std::string& pattern, std::string response) {
  std::regex re(pattern);
  return on(
      [re](std::string_view p) { return std::regex_search(p.begin(), p.end(), re); },
      std::move(response));
}

ScriptedBackend& ScriptedBackend::otherwise(std::string response) {
  return otherwise(Responder([r = std::move(response)](std::string_view) { return r; }));
}

ScriptedBackend& ScriptedBackend::otherwise(Responder responder) {
  fallback_ = std::move(responder);
  return *this;
}

Completion ScriptedBackend::complete(const CompletionRequest& request) {
  const std::string prompt = request.prompt_text();
  ++calls_;
  {
    std::lock_guard lock(log_mutex_);
    prompts_.push_back(prompt);
  }
  Completion out;
  out.usage.calls = 1;
  bool answered = false;
  for (const auto& rule : rules_) {
    if (rule.matcher(prompt)) {
      out.text = rule.responder(prompt);
      answered = true;
      break;
    }
  }
  if (!answered && fallback_) out.text = fallback_(prompt);
  record(out.usage);
  return out;
}

std::vector<std::string> ScriptedBackend::prompts() const {
  std::lock_guard lock(log_mutex_);
  return prompts_;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& j) {
  auto backend = std::make_shared<ScriptedBackend>();
  for (const auto& rule : j.value("rules", nlohmann::json::array())) {
    const auto response = rule.at("response").get<std::string>();
    if (rule.contains("contains")) {
      backend->on_contains(rule.at("contains").get<std::string>(), response);
    } else if (rule.contains("regex")) {
      backend->on_regex(rule.at("regex").get<std::string>(), response);
    } else {
      throw Error(ErrorCode::kConfigError, "scripted rule needs 'contains' or 'regex': " + rule.dump());
    }
  }
  backend->otherwise(j.value("default", ""));
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open script " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

std::string request_digest(const CompletionRequest& request) {
  const std::string canonical = request.to_json().dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

CachedBackend::CachedBackend(BackendPtr inner, std::filesystem::path store)
    : inner_(std::move(inner)), store_(std::move(store)) {
  std::ifstream in(store_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("value").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run; the request is re-issued.
    }
  }
}

Completion CachedBackend::complete(const CompletionRequest& request) {
  const auto key = request_digest(request);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++hits_;
      return {it->second, {}};
    }
  }
  ++misses_;
  auto result = inner_->complete(request);
  record(result.usage);

  std::lock_guard lock(mutex_);
  if (entries_.emplace(key, result.text).second) {
    std::ofstream out(store_, std::ios::app);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot append to cache " + store_.string());
    out << nlohmann::json{{"key", key}, {"value", result.text}, {"created_at", utc_timestamp()}}.dump()
        << "\n";
  }
  return result;
}

BackendPtr cache_wrap(BackendPtr backend, const std::filesystem::path& store) {
  return std::make_shared<CachedBackend>(std::move(backend), store);
}

}  // namespace htam
