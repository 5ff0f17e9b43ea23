#pragma once

/// Domain-term identification and inline expansion from a specialized
/// ophthalmology dictionary. The dictionary is immutable after load; all
/// operations are pure and concurrency-safe.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clara/errors.hpp"

namespace clara {

struct JargonEntry {
  std::string term;        // canonical surface form
  std::string expansion;   // definition/context text
  double weight = 1.0;     // in [0,1]
  std::vector<std::string> aliases;
};

/// Matching is case-insensitive over word boundaries: a key is folded by
/// tokenizing into runs of ASCII alphanumerics / bytes >= 0x80, lowercasing,
/// and joining with single spaces ("Anterior  Uveitis" == "anterior uveitis").
class JargonDictionary {
 public:
  JargonDictionary() = default;

  /// Throws ValidationError on duplicate folded keys or empty expansions.
  static JargonDictionary from_entries(std::vector<JargonEntry> entries);

  /// Dictionary file: JSON Lines {"term","expansion","weight","aliases":[...]}.
  static JargonDictionary from_jsonl(const std::filesystem::path& path);

  /// Case-folded lookup of a term or alias; nullptr when absent.
  const JargonEntry* lookup(std::string_view surface) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_key_words() const { return max_key_words_; }
  std::span<const JargonEntry> entries() const { return entries_; }

 private:
  std::vector<JargonEntry> entries_;
  std::map<std::string, std::size_t> by_folded_key_;  // folded term/alias -> entry
  std::size_t max_key_words_ = 0;
};

/// Folding used for dictionary keys and candidate spans (see class comment).
std::string fold_term(std::string_view text);

struct TermMatch {
  std::string term;       // canonical dictionary term
  std::size_t begin = 0;  // byte offsets into the scanned text
  std::size_t end = 0;
};

/// Case-insensitive leftmost-longest scan over word boundaries. Output spans
/// are non-overlapping and sorted; each span is reported once.
std::vector<TermMatch> identify_terms(std::string_view text, const JargonDictionary& dict);

struct AnnotatedText {
  std::string text;
  struct Insertion {
    std::size_t pos = 0;  // byte offset in the annotated text
    std::size_t len = 0;
  };
  std::vector<Insertion> insertions;
};

/// Appends " (expansion)" after the first occurrence of each distinct term;
/// later occurrences are untouched. Matches must come from identify_terms on
/// the same text, else SpanMismatchError. Removing the recorded insertions
/// recovers the input exactly.
AnnotatedText annotate_inline(std::string_view text, std::span<const TermMatch> matches,
                              const JargonDictionary& dict);

}  // namespace clara
