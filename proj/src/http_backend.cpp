#include "htam/http_backend.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include "htam/error.hpp"
#include "httplib.h"

namespace htam {

HttpEndpoint HttpEndpoint::parse(const std::string& base_url) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, kUrl)) {
    throw Error(ErrorCode::kConfigError, "malformed API base URL: " + base_url);
  }
  HttpEndpoint e;
  e.scheme = m[1];
  e.host = m[2];
  e.port = m[3].matched ? std::stoi(m[3]) : (e.scheme == "https" ? 443 : 80);
  e.path_prefix = m[4].matched ? m[4].str() : "";
  while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  return e;
}

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace

HttpClientOptions HttpClientOptions::from_env() {
  HttpClientOptions o;
  o.api_base = env_or("HTAM_API_BASE");
  o.api_key = env_or("HTAM_API_KEY");
  o.model = env_or("HTAM_MODEL");
  return o;
}

HttpJsonClient::HttpJsonClient(HttpClientOptions options)
    : options_(std::move(options)),
      endpoint_(HttpEndpoint::parse(options_.api_base)),
      permits_(std::max(1, options_.max_in_flight)) {
  if (options_.max_attempts < 1) options_.max_attempts = 1;
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

HttpJsonClient::~HttpJsonClient() = default;

nlohmann::json HttpJsonClient::post(const std::string& route, const nlohmann::json& body) {
  permits_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{permits_};

  httplib::Client client(endpoint_.scheme + "://" + endpoint_.host + ":" + std::to_string(endpoint_.port));
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  if (!options_.api_key.empty()) client.set_bearer_token_auth(options_.api_key);

  const std::string path = endpoint_.path_prefix + route;
  const std::string payload = body.dump();
  int last_status = 0;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      throw Error(ErrorCode::kTransport, "POST " + path + " failed: " + httplib::to_string(res.error()));
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kProtocol, std::string("response is not JSON: ") + e.what());
      }
    }
    const bool transient = res->status == 429 || res->status >= 500;
    if (!transient) {
      throw Error(ErrorCode::kProtocol, "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    if (attempt < options_.max_attempts) {
      ++retries_;
      options_.sleep(options_.backoff_base * (1 << (attempt - 1)));
    }
  }
  if (last_status == 429) {
    throw Error(ErrorCode::kRateLimited, "still rate limited after " + std::to_string(options_.max_attempts) +
                                             " attempts");
  }
  throw Error(ErrorCode::kTransport, "HTTP " + std::to_string(last_status) + " after " +
                                         std::to_string(options_.max_attempts) + " attempts");
}

HttpChatBackend::HttpChatBackend(HttpClientOptions options) : client_(std::move(options)) {}

Completion HttpChatBackend::complete(const CompletionRequest& request) {
  auto body = request.to_json();
  if (request.model.empty()) body["model"] = client_.options().model;
  auto response = client_.post("/chat/completions", body);

  Completion out;
  try {
    out.text = response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("unexpected completion body: ") + e.what());
  }
  out.usage.calls = 1;
  if (auto it = response.find("usage"); it != response.end() && it->is_object()) {
    out.usage.prompt_tokens = it->value("prompt_tokens", 0LL);
    out.usage.completion_tokens = it->value("completion_tokens", 0LL);
  }
  record(out.usage);
  return out;
}

}  // namespace htam
