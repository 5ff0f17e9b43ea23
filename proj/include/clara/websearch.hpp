#pragma once

/// Search-tool port with a scripted mock and a live adapter. The pipeline
/// uses it as the retrieval fallback inside the iterative critique loop.

#include <filesystem>
#include <string>
#include <vector>

#include "clara/errors.hpp"

namespace clara {

struct SearchResult {
  std::string title;
  std::string url;
  std::string snippet_text;
  int rank = 1;  // contiguous from 1
};

class SearchPort {
 public:
  virtual ~SearchPort() = default;
  /// At most k results, rank-ordered. An empty result is not an error;
  /// transport or quota failures throw SearchUnavailableError.
  virtual std::vector<SearchResult> search(const std::string& query, std::size_t k) = 0;
};

/// Canned results keyed by query substring: the first registered key that is
/// a substring of the query wins. No matching key yields no results.
/// Immutable after construction.
class MockSearch : public SearchPort {
 public:
  void add(std::string key, std::vector<SearchResult> results);

  /// JSONL: {"key":"...","results":[{"title","url","snippet_text"},...]}
  static MockSearch from_jsonl(const std::filesystem::path& path);

  std::vector<SearchResult> search(const std::string& query, std::size_t k) override;

 private:
  std::vector<std::pair<std::string, std::vector<SearchResult>>> canned_;
};

/// Always throws SearchUnavailableError; for exercising the degradation path.
class UnavailableSearch : public SearchPort {
 public:
  std::vector<SearchResult> search(const std::string&, std::size_t) override {
    throw SearchUnavailableError("search port configured as unavailable");
  }
};

struct HttpSearchOptions {
  std::string url;      // POST {"api_key","query","max_results"}
  std::string api_key;  // empty: read from CLARA_SEARCH_API_KEY
  int timeout_ms = 30000;
};

/// Tavily-style JSON adapter: reads {"results":[{"title","url","content"}]}.
class HttpSearch : public SearchPort {
 public:
  explicit HttpSearch(HttpSearchOptions options);
  std::vector<SearchResult> search(const std::string& query, std::size_t k) override;

 private:
  HttpSearchOptions options_;
};

}  // namespace clara
