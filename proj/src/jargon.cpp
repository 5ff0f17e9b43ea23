#include "clara/jargon.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "clara/util.hpp"

namespace clara {

namespace {

inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

struct Word {
  std::size_t begin;
  std::size_t end;
};

std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    words.push_back({begin, i});
  }
  return words;
}

std::size_t count_words(std::string_view text) { return split_words(text).size(); }

}  // namespace

std::string fold_term(std::string_view text) {
  std::string folded;
  for (const Word& w : split_words(text)) {
    if (!folded.empty()) folded.push_back(' ');
    for (std::size_t i = w.begin; i < w.end; ++i) {
      char c = text[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      folded.push_back(c);
    }
  }
  return folded;
}

JargonDictionary JargonDictionary::from_entries(std::vector<JargonEntry> entries) {
  JargonDictionary dict;
  dict.entries_ = std::move(entries);
  for (std::size_t i = 0; i < dict.entries_.size(); ++i) {
    const JargonEntry& entry = dict.entries_[i];
    if (trim(entry.expansion).empty()) {
      throw ValidationError("jargon term '" + entry.term + "' has an empty expansion");
    }
    std::vector<std::string> keys;
    keys.push_back(entry.term);
    keys.insert(keys.end(), entry.aliases.begin(), entry.aliases.end());
    for (const auto& key : keys) {
      std::string folded = fold_term(key);
      if (folded.empty()) {
        throw ValidationError("jargon key '" + key + "' folds to nothing");
      }
      auto [it, inserted] = dict.by_folded_key_.try_emplace(folded, i);
      if (!inserted) {
        throw ValidationError("jargon key '" + folded + "' appears more than once");
      }
      dict.max_key_words_ = std::max(dict.max_key_words_, count_words(folded));
    }
  }
  return dict;
}

JargonDictionary JargonDictionary::from_jsonl(const std::filesystem::path& path) {
  std::vector<JargonEntry> entries;
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
    JargonEntry entry;
    entry.term = j.value("term", "");
    entry.expansion = j.value("expansion", "");
    entry.weight = std::clamp(j.value("weight", 1.0), 0.0, 1.0);
    if (j.contains("aliases")) {
      for (const auto& a : j.at("aliases")) entry.aliases.push_back(a.get<std::string>());
    }
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries));
}

const JargonEntry* JargonDictionary::lookup(std::string_view surface) const {
  auto it = by_folded_key_.find(fold_term(surface));
  if (it == by_folded_key_.end()) return nullptr;
  return &entries_[it->second];
}

std::vector<TermMatch> identify_terms(std::string_view text, const JargonDictionary& dict) {
  std::vector<TermMatch> matches;
  if (dict.empty()) return matches;
  auto words = split_words(text);

  std::size_t w = 0;
  while (w < words.size()) {
    const JargonEntry* found = nullptr;
    std::size_t found_len = 0;
    std::size_t max_len = std::min(dict.max_key_words(), words.size() - w);
    for (std::size_t len = max_len; len >= 1; --len) {
      std::string_view span =
          text.substr(words[w].begin, words[w + len - 1].end - words[w].begin);
      if (const JargonEntry* entry = dict.lookup(span)) {
        found = entry;
        found_len = len;
        break;
      }
    }
    if (found) {
      matches.push_back({found->term, words[w].begin, words[w + found_len - 1].end});
      w += found_len;
    } else {
      ++w;
    }
  }
  return matches;
}

AnnotatedText annotate_inline(std::string_view text, std::span<const TermMatch> matches,
                              const JargonDictionary& dict) {
  AnnotatedText out;
  std::set<std::string> already_expanded;
  std::size_t cursor = 0;

  for (const TermMatch& m : matches) {
    if (m.begin < cursor || m.end > text.size() || m.begin >= m.end) {
      throw SpanMismatchError("term span [" + std::to_string(m.begin) + "," +
                              std::to_string(m.end) + ") does not align with the text");
    }
    const JargonEntry* entry = dict.lookup(m.term);
    if (!entry || fold_term(text.substr(m.begin, m.end - m.begin)) != fold_term(m.term)) {
      throw SpanMismatchError("span text does not match term '" + m.term + "'");
    }
    out.text.append(text.substr(cursor, m.end - cursor));
    cursor = m.end;
    if (already_expanded.insert(entry->term).second) {
      std::string inserted = " (" + entry->expansion + ")";
      out.insertions.push_back({out.text.size(), inserted.size()});
      out.text.append(inserted);
    }
  }
  out.text.append(text.substr(cursor));
  return out;
}

}  // namespace clara
