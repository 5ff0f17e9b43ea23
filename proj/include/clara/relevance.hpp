#pragma once

/// Weighted relevance scoring for retrieval: an add-on score from weighted
/// query parts, an optional further add-on from expanded jargon terms, and
/// ranking that combines either add-on with the full-query base score. All
/// functions are pure over immutable inputs and safe to call concurrently.

#include <span>
#include <string>
#include <vector>

#include "clara/embedding.hpp"
#include "clara/vector_index.hpp"

namespace clara {

/// A flagged query fragment with its uncertainty-derived weight.
struct WeightedQueryPart {
  std::string text;
  double weight = 0.0;  // in [0,1]
  Vector vector;        // embed(text)
};

/// A domain term with its expansion text and dictionary weight.
struct JargonExpansion {
  std::string term;
  std::string expansion;
  double weight = 1.0;  // in [0,1]
  Vector vector;        // embed(expansion)
};

struct QueryBundle {
  std::string full_query_text;
  Vector full_query_vector;
  std::vector<WeightedQueryPart> parts;   // may be empty
  std::vector<JargonExpansion> jargon;    // may be empty
};

enum class RankMode { BaseOnly, Weighted, Reweighted };

const char* to_string(RankMode mode);

/// base = sim(full query, snippet); addon = 0, the part sum, or the part sum
/// plus the jargon sum, depending on mode. total is exactly base + addon.
struct ScoredSnippet {
  Snippet snippet;
  double base = 0.0;
  double addon = 0.0;
  double total = 0.0;
};

/// Sum over parts of weight * cosine(part, doc), accumulated in input order.
/// Empty parts give 0.
double weighted_relevance(std::span<const WeightedQueryPart> parts,
                          std::span<const double> doc_vector);

/// weighted_relevance plus the analogous sum over jargon expansions; with no
/// jargon this reduces exactly to weighted_relevance.
double reweighted_relevance(std::span<const WeightedQueryPart> parts,
                            std::span<const JargonExpansion> jargon,
                            std::span<const double> doc_vector);

/// Scores every snippet as base + addon and returns the top k by total,
/// ties broken by ascending snippet_id. Throws EmptyIndexError.
std::vector<ScoredSnippet> rank_with_addon(const VectorIndex& index, const QueryBundle& bundle,
                                           RankMode mode, std::size_t k);

/// The add-on and total for a single document vector under the given mode.
double addon_score(const QueryBundle& bundle, RankMode mode, std::span<const double> doc_vector);

}  // namespace clara
