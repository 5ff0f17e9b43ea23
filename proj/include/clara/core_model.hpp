#pragma once

/// Domain types shared by the pipeline and the benchmark harness: languages,
/// questions, answers, benchmark sets. All types are immutable after
/// construction and safe to share across concurrent readers.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clara/errors.hpp"

namespace clara {

enum class Language { EN, ES, PT, FIL, ZH, HI, FR };

/// Canonical column order for reports (English first; gaps are vs English).
inline constexpr std::array<Language, 7> kLanguageOrder = {
    Language::EN, Language::ES, Language::PT, Language::FIL,
    Language::ZH, Language::HI, Language::FR};

const char* to_string(Language lang);
std::optional<Language> parse_language(std::string_view code);

enum class Category { Basic, ClinicalSurgical };

const char* to_string(Category category);
/// Case-insensitive, ignores spaces/hyphens/underscores ("clinical-surgical").
std::optional<Category> parse_category(std::string_view name);

enum class Choice : char { A = 'A', B = 'B', C = 'C', D = 'D' };

inline char to_char(Choice c) { return static_cast<char>(c); }
/// Trims whitespace, accepts lowercase single letters.
std::optional<Choice> parse_choice(std::string_view text);

/// A prediction; nullopt is Abstain, which always scores as incorrect.
using Prediction = std::optional<Choice>;
std::string prediction_label(const Prediction& p);

/// One MCQ in one language. qid is authored in the data file, not derived
/// from content, so paired translations share an identity.
struct QuestionItem {
  std::string qid;
  Language language = Language::EN;
  Category category = Category::Basic;
  std::string subtype;
  std::string stem;
  std::map<std::string, std::string> options;  // expected keys exactly "A".."D"
  std::string answer;                          // expected one of "A".."D"

  /// Only meaningful after validation.
  Choice answer_key() const { return *parse_choice(answer); }
};

enum class ViolationKind { MissingCell, FieldMismatch, Duplicate, Malformed };

struct Violation {
  ViolationKind kind = ViolationKind::Malformed;
  std::string qid;
  std::string language;  // empty when not language-specific
  std::string detail;
};

std::string to_string(const Violation& v);

class BenchmarkValidationError : public ValidationError {
 public:
  explicit BenchmarkValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// A validated paired benchmark: every qid appears exactly once per declared
/// language, with answer key / category / subtype identical across languages.
struct BenchmarkSet {
  std::vector<QuestionItem> items;  // sorted by (qid, language code)
  std::set<Language> languages;
  std::vector<std::string> qids;  // sorted, unique
};

/// Exhaustive check: returns every violation found, empty for a valid set.
std::vector<Violation> check_benchmark(const std::vector<QuestionItem>& raw_items);

/// Returns a BenchmarkSet satisfying the pairing invariant, or throws
/// BenchmarkValidationError enumerating every violation. Idempotent on the
/// items of a valid set.
BenchmarkSet validate_benchmark(std::vector<QuestionItem> raw_items);

struct AnswerOutcome {
  std::string qid;
  Language language = Language::EN;
  Prediction predicted;  // nullopt = Abstain
  bool correct = false;
  std::string method;
  int run_index = 0;
};

nlohmann::json outcome_to_json(const AnswerOutcome& outcome);
AnswerOutcome outcome_from_json(const nlohmann::json& j);

// Benchmark file format: JSON Lines, one object per item, UTF-8 mandatory:
// {"qid","language","category","subtype","question",
//  "options":{"A":..,"B":..,"C":..,"D":..},"answer"}
nlohmann::json question_to_json(const QuestionItem& item);
/// Throws IoError on structural problems (non-object, unknown language code,
/// unknown category). Shape problems inside a structurally sound item
/// (missing options, bad answer letter) are left for check_benchmark.
QuestionItem question_from_json(const nlohmann::json& j);
std::vector<QuestionItem> load_benchmark_jsonl(const std::filesystem::path& path);

}  // namespace clara
