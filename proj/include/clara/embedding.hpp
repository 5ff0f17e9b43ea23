#pragma once

/// Embedding port with a deterministic test implementation and an HTTP
/// adapter for a real encoder service, plus exact cosine similarity.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clara/errors.hpp"

namespace clara {

using Vector = std::vector<double>;

/// Standard cosine; 0 when either vector is all-zero (empty queries degrade
/// gracefully). Throws DimensionMismatchError on unequal dimensions.
double cosine_sim(std::span<const double> u, std::span<const double> v);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Vector embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Deterministic bag-of-tokens embedder for offline runs. Tokenization:
/// ASCII letters are lowercased; a token is a maximal run of ASCII
/// alphanumerics or bytes >= 0x80 (so UTF-8 text without spaces still maps to
/// non-zero vectors). Each token lands in bucket fnv1a64(token) % dimension;
/// bucket counts are L2-normalized. Empty text embeds to the zero vector.
/// Byte-identical output for the same text on every platform.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
  Vector embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
};

struct HttpEmbedderOptions {
  std::string url;  // POST {"texts":[...]} -> {"vectors":[[...]]}
  std::size_t dimension = 0;
  int timeout_ms = 30000;
};

/// Adapter for an external encoder service (the live deployment binds a
/// medical query encoder here). Throws EmbedderUnavailableError on transport
/// failure or a malformed response.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderOptions options) : options_(std::move(options)) {}
  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const;
  std::size_t dimension() const override { return options_.dimension; }

 private:
  HttpEmbedderOptions options_;
};

/// In-place L2 normalization; the all-zero vector is left untouched.
void l2_normalize(Vector& v);

}  // namespace clara
