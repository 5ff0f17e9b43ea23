#include "clara/websearch.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "clara/util.hpp"

namespace clara {

void MockSearch::add(std::string key, std::vector<SearchResult> results) {
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = static_cast<int>(i + 1);
  canned_.emplace_back(std::move(key), std::move(results));
}

MockSearch MockSearch::from_jsonl(const std::filesystem::path& path) {
  MockSearch mock;
  auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    std::vector<SearchResult> results;
    for (const auto& rj : j.value("results", nlohmann::json::array())) {
      SearchResult r;
      r.title = rj.value("title", "");
      r.url = rj.value("url", "");
      r.snippet_text = rj.value("snippet_text", "");
      results.push_back(std::move(r));
    }
    mock.add(j.value("key", ""), std::move(results));
  }
  return mock;
}

std::vector<SearchResult> MockSearch::search(const std::string& query, std::size_t k) {
  for (const auto& [key, results] : canned_) {
    if (query.find(key) == std::string::npos) continue;
    std::vector<SearchResult> out(results.begin(),
                                  results.begin() + std::min(k, results.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
    return out;
  }
  return {};
}

HttpSearch::HttpSearch(HttpSearchOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    if (const char* env = std::getenv("CLARA_SEARCH_API_KEY")) options_.api_key = env;
  }
}

std::vector<SearchResult> HttpSearch::search(const std::string& query, std::size_t k) {
  nlohmann::json body = {{"api_key", options_.api_key},
                         {"query", query},
                         {"max_results", k}};
  httplib::Client client(options_.url);
  client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
  auto res = client.Post("/", body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw SearchUnavailableError(
        "search service at " + options_.url + " failed: " +
        (res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error())));
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    std::vector<SearchResult> out;
    for (const auto& rj : j.value("results", nlohmann::json::array())) {
      if (out.size() >= k) break;
      SearchResult r;
      r.title = rj.value("title", "");
      r.url = rj.value("url", "");
      r.snippet_text = rj.value("content", rj.value("snippet_text", ""));
      r.rank = static_cast<int>(out.size() + 1);
      if (trim(r.snippet_text).empty()) continue;
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SearchUnavailableError(std::string("unparseable search response: ") + e.what());
  }
}

}  // namespace clara
