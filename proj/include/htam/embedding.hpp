#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "htam/http_backend.hpp"

namespace htam {

using Vector = std::vector<double>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // One L2-normalized vector per input, in input order.
  virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
};

using EmbedderPtr = std::shared_ptr<EmbeddingProvider>;

double dot(const Vector& a, const Vector& b);
void l2_normalize(Vector& v);
// Cosine of two arbitrary vectors; 0 if either is zero.
double cosine_similarity(const Vector& a, const Vector& b);

// Lower-cased tokens split on underscores, whitespace and punctuation.
std::vector<std::string> lexical_tokens(std::string_view text);

// Hashed token counts (FNV-1a into `dimensions` buckets), L2-normalized.
class LexicalEmbedder : public EmbeddingProvider {
 public:
  explicit LexicalEmbedder(std::size_t dimensions = 1024) : dimensions_(dimensions) {}
  std::vector<Vector> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimensions_;
};

// POST {base}/embeddings {model, input:[...]}; reads data[i].embedding.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpClientOptions options);
  std::vector<Vector> embed(std::span<const std::string> texts) override;

 private:
  HttpJsonClient client_;
};

// HTTP provider when HTAM_API_BASE and HTAM_EMBED_MODEL are set, lexical otherwise.
EmbedderPtr make_default_embedder();

}  // namespace htam
