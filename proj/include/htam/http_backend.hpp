#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>

#include "htam/backend.hpp"

namespace htam {

struct HttpEndpoint {
  std::string scheme = "http";
  std::string host;
  int port = 80;
  std::string path_prefix;  // e.g. "/v1"

  // "https://api.example.com/v1" -> {https, api.example.com, 443, /v1}
  static HttpEndpoint parse(const std::string& base_url);
};

struct HttpClientOptions {
  std::string api_base;
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  int max_in_flight = 4;
  // Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep;

  // HTAM_API_BASE, HTAM_API_KEY, HTAM_MODEL.
  static HttpClientOptions from_env();
};

// Performs one POST with retries on 429/5xx. Returns the body of the first
// successful response. Shared by the chat and embedding clients.
class HttpJsonClient {
 public:
  explicit HttpJsonClient(HttpClientOptions options);
  ~HttpJsonClient();

  nlohmann::json post(const std::string& route, const nlohmann::json& body);

  int retries() const { return retries_.load(); }
  const HttpClientOptions& options() const { return options_; }

 private:
  HttpClientOptions options_;
  HttpEndpoint endpoint_;
  std::counting_semaphore<> permits_;
  std::atomic<int> retries_{0};
};

// Chat-completions client: POST {base}/chat/completions, reads
// choices[0].message.content.
class HttpChatBackend : public CompletionBackend {
 public:
  explicit HttpChatBackend(HttpClientOptions options);

  Completion complete(const CompletionRequest& request) override;

  int retries() const { return client_.retries(); }

 private:
  HttpJsonClient client_;
};

}  // namespace htam
