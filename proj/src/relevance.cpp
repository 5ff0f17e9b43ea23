#include "clara/relevance.hpp"

#include <algorithm>

namespace clara {

const char* to_string(RankMode mode) {
  switch (mode) {
    case RankMode::BaseOnly: return "base_only";
    case RankMode::Weighted: return "weighted";
    case RankMode::Reweighted: return "reweighted";
  }
  return "base_only";
}

double weighted_relevance(std::span<const WeightedQueryPart> parts,
                          std::span<const double> doc_vector) {
  double sum = 0.0;
  for (const auto& part : parts) {
    sum += part.weight * cosine_sim(part.vector, doc_vector);
  }
  return sum;
}

double reweighted_relevance(std::span<const WeightedQueryPart> parts,
                            std::span<const JargonExpansion> jargon,
                            std::span<const double> doc_vector) {
  double sum = weighted_relevance(parts, doc_vector);
  for (const auto& term : jargon) {
    sum += term.weight * cosine_sim(term.vector, doc_vector);
  }
  return sum;
}

double addon_score(const QueryBundle& bundle, RankMode mode, std::span<const double> doc_vector) {
  switch (mode) {
    case RankMode::BaseOnly:
      return 0.0;
    case RankMode::Weighted:
      return weighted_relevance(bundle.parts, doc_vector);
    case RankMode::Reweighted:
      return reweighted_relevance(bundle.parts, bundle.jargon, doc_vector);
  }
  return 0.0;
}

std::vector<ScoredSnippet> rank_with_addon(const VectorIndex& index, const QueryBundle& bundle,
                                           RankMode mode, std::size_t k) {
  if (index.size() == 0) throw EmptyIndexError("rank_with_addon on an empty index");

  std::vector<ScoredSnippet> scored;
  scored.reserve(index.size());
  for (const Snippet& snippet : index.snippets()) {
    ScoredSnippet s;
    s.base = cosine_sim(bundle.full_query_vector, snippet.vector);
    s.addon = addon_score(bundle, mode, snippet.vector);
    s.total = s.base + s.addon;
    s.snippet = snippet;
    scored.push_back(std::move(s));
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredSnippet& a, const ScoredSnippet& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.snippet.snippet_id < b.snippet.snippet_id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace clara
