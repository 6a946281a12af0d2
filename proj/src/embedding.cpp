#include "htam/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "htam/error.hpp"

namespace htam {

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void l2_normalize(Vector& v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<Vector> LexicalEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Vector v(dimensions_, 0.0);
    for (const auto& tok : lexical_tokens(text)) v[fnv1a(tok) % dimensions_] += 1.0;
    l2_normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpClientOptions options) : client_(std::move(options)) {}

std::vector<Vector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  nlohmann::json body{{"model", client_.options().model},
                      {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  nlohmann::json response;
  try {
    response = client_.post("/embeddings", body);
  } catch (const Error& e) {
    throw Error(ErrorCode::kProviderFailure, e.what());
  }
  std::vector<Vector> out;
  try {
    for (const auto& item : response.at("data")) {
      auto v = item.at("embedding").get<Vector>();
      l2_normalize(v);
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderFailure, std::string("unexpected embedding body: ") + e.what());
  }
  if (out.size() != texts.size()) {
    throw Error(ErrorCode::kProviderFailure, "embedding count mismatch");
  }
  return out;
}

EmbedderPtr make_default_embedder() {
  const char* base = std::getenv("HTAM_API_BASE");
  const char* model = std::getenv("HTAM_EMBED_MODEL");
  if (base && model && *base && *model) {
    auto options = HttpClientOptions::from_env();
    options.model = model;
    return std::make_shared<HttpEmbeddingProvider>(options);
  }
  return std::make_shared<LexicalEmbedder>();
}

}  // namespace htam
