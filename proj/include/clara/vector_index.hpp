#pragma once

/// Corpus ingestion (whitespace-token chunking), the snippet store, and an
/// exact cosine-similarity top-k scan. Build-then-freeze: single-writer
/// ingestion, then immutable and safe for unlimited concurrent readers.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clara/embedding.hpp"
#include "clara/errors.hpp"

namespace clara {

enum class SnippetSource { Pubmed, Textbook, Wikipedia, Other };

const char* to_string(SnippetSource source);
std::optional<SnippetSource> parse_snippet_source(std::string_view name);

struct Snippet {
  std::string snippet_id;  // doc_id + ordinal, unique within an index
  std::string doc_id;
  SnippetSource source = SnippetSource::Other;
  std::string text;  // at most snippet_length whitespace tokens
  Vector vector;     // L2-normalized unless all-zero
};

struct ScoredHit {
  std::size_t index = 0;  // position in the frozen snippet array
  double score = 0.0;
};

class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension);

  /// Build phase. Throws on duplicate snippet_id or dimension mismatch.
  void add(Snippet snippet);

  std::size_t size() const { return snippets_.size(); }
  std::size_t dimension() const { return dimension_; }
  const Snippet& at(std::size_t i) const { return snippets_[i]; }
  std::span<const Snippet> snippets() const { return snippets_; }

  /// The k highest cosine scores against `query`, descending, ties broken by
  /// ascending snippet_id; fewer than k when the index is smaller. Throws
  /// EmptyIndexError on an empty index.
  std::vector<ScoredHit> top_k(std::span<const double> query, std::size_t k) const;

  // Persistence. Binary file: magic "CLIX1", u32 dimension, u64 count, then
  // count fixed-width records of dimension little-endian f64; snippet
  // metadata goes to a JSON sidecar at <path>.meta.json. Byte-deterministic.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  std::size_t dimension_;
  std::vector<Snippet> snippets_;
  std::set<std::string> ids_;
};

/// Whitespace-token chunks of at most `snippet_length` tokens; consecutive
/// chunk starts advance by snippet_length - overlap. Every token appears in
/// at least one chunk; empty input yields no chunks. Total function.
std::vector<std::string> chunk_document(std::string_view doc_text,
                                        std::size_t snippet_length = 200,
                                        std::size_t overlap = 0);

struct CorpusDoc {
  std::string doc_id;
  SnippetSource source = SnippetSource::Other;
  std::string title;
  std::string text;
};

/// Corpus file: JSON Lines {"doc_id","source","title","text"}.
std::vector<CorpusDoc> load_corpus_jsonl(const std::filesystem::path& path);

struct IngestStats {
  std::size_t docs = 0;
  std::size_t snippets = 0;
  std::size_t dimension = 0;
};

/// Chunks every document and embeds each chunk. Snippet ids are
/// "<doc_id>#<ordinal>" with ordinals starting at 0.
VectorIndex build_index(std::span<const CorpusDoc> docs, const Embedder& embedder,
                        std::size_t snippet_length = 200, std::size_t overlap = 0,
                        IngestStats* stats = nullptr);

}  // namespace clara
