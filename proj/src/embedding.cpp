#include "clara/embedding.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "clara/util.hpp"

namespace clara {

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionMismatchError("cosine_sim: dimensions " + std::to_string(u.size()) +
                                 " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

void l2_normalize(Vector& v) {
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq == 0.0) return;
  double norm = std::sqrt(norm_sq);
  for (double& x : v) x /= norm;
}

namespace {

inline bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

}  // namespace

Vector HashingEmbedder::embed(std::string_view text) const {
  Vector counts(dimension_, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    counts[fnv1a64(token) % dimension_] += 1.0;
    token.clear();
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (is_token_byte(c)) {
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      token.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  l2_normalize(counts);
  return counts;
}

std::vector<Vector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  nlohmann::json body;
  body["texts"] = texts;

  httplib::Client client(options_.url);
  client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
  auto res = client.Post("/", body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw EmbedderUnavailableError(
        "embedder service at " + options_.url + " failed: " +
        (res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error())));
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    std::vector<Vector> vectors;
    for (const auto& vj : j.at("vectors")) {
      Vector v;
      v.reserve(vj.size());
      for (const auto& x : vj) v.push_back(x.get<double>());
      vectors.push_back(std::move(v));
    }
    if (vectors.size() != texts.size()) {
      throw EmbedderUnavailableError("embedder returned " + std::to_string(vectors.size()) +
                                     " vectors for " + std::to_string(texts.size()) + " texts");
    }
    return vectors;
  } catch (const nlohmann::json::exception& e) {
    throw EmbedderUnavailableError(std::string("unparseable embedder response: ") + e.what());
  }
}

Vector HttpEmbedder::embed(std::string_view text) const {
  return embed_batch({std::string(text)}).front();
}

}  // namespace clara
