#include "clara/core_model.hpp"

#include <algorithm>
#include <sstream>

#include "clara/util.hpp"

namespace clara {

namespace {

const char* kOptionKeys[] = {"A", "B", "C", "D"};

std::string fold_category(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '-' || c == '_' || c == '/') continue;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

}  // namespace

const char* to_string(Language lang) {
  switch (lang) {
    case Language::EN: return "EN";
    case Language::ES: return "ES";
    case Language::PT: return "PT";
    case Language::FIL: return "FIL";
    case Language::ZH: return "ZH";
    case Language::HI: return "HI";
    case Language::FR: return "FR";
  }
  return "EN";
}

std::optional<Language> parse_language(std::string_view code) {
  std::string upper(code);
  for (char& c : upper) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  for (Language lang : kLanguageOrder) {
    if (upper == to_string(lang)) return lang;
  }
  return std::nullopt;
}

const char* to_string(Category category) {
  return category == Category::Basic ? "Basic" : "ClinicalSurgical";
}

std::optional<Category> parse_category(std::string_view name) {
  std::string folded = fold_category(name);
  if (folded == "basic" || folded == "basicsciences") return Category::Basic;
  if (folded == "clinicalsurgical" || folded == "clinical" || folded == "surgery" ||
      folded == "surgical") {
    return Category::ClinicalSurgical;
  }
  return std::nullopt;
}

std::optional<Choice> parse_choice(std::string_view text) {
  std::string_view t = trim(text);
  if (t.size() != 1) return std::nullopt;
  char c = t[0];
  if (c >= 'a' && c <= 'd') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'D') return std::nullopt;
  return static_cast<Choice>(c);
}

std::string prediction_label(const Prediction& p) {
  if (!p.has_value()) return "Abstain";
  return std::string(1, to_char(*p));
}

std::string to_string(const Violation& v) {
  std::ostringstream out;
  switch (v.kind) {
    case ViolationKind::MissingCell: out << "missing-cell"; break;
    case ViolationKind::FieldMismatch: out << "field-mismatch"; break;
    case ViolationKind::Duplicate: out << "duplicate"; break;
    case ViolationKind::Malformed: out << "malformed"; break;
  }
  out << " qid=" << (v.qid.empty() ? "?" : v.qid);
  if (!v.language.empty()) out << " language=" << v.language;
  if (!v.detail.empty()) out << " (" << v.detail << ")";
  return out.str();
}

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << "benchmark validation failed with " << violations.size() << " violation(s):";
  for (const auto& v : violations) out << "\n  " << to_string(v);
  return out.str();
}

}  // namespace

BenchmarkValidationError::BenchmarkValidationError(std::vector<Violation> violations)
    : ValidationError(summarize(violations)), violations_(std::move(violations)) {}

std::vector<Violation> check_benchmark(const std::vector<QuestionItem>& raw_items) {
  std::vector<Violation> violations;

  auto malformed = [&](const QuestionItem& item, std::string detail) {
    violations.push_back({ViolationKind::Malformed, item.qid,
                          to_string(item.language), std::move(detail)});
  };

  for (const auto& item : raw_items) {
    if (item.qid.empty()) malformed(item, "empty qid");
    if (trim(item.stem).empty()) malformed(item, "empty question stem");
    if (item.options.size() != 4) {
      malformed(item, "expected 4 options, found " + std::to_string(item.options.size()));
    }
    for (const char* key : kOptionKeys) {
      auto it = item.options.find(key);
      if (it == item.options.end()) {
        malformed(item, std::string("missing option ") + key);
      } else if (trim(it->second).empty()) {
        malformed(item, std::string("empty option ") + key);
      }
    }
    for (const auto& [key, _] : item.options) {
      if (key != "A" && key != "B" && key != "C" && key != "D") {
        malformed(item, "unexpected option key '" + key + "'");
      }
    }
    if (!parse_choice(item.answer).has_value()) {
      malformed(item, "answer key '" + item.answer + "' not in {A,B,C,D}");
    }
  }

  // Duplicates: same qid+language twice.
  std::map<std::pair<std::string, Language>, int> cell_counts;
  for (const auto& item : raw_items) cell_counts[{item.qid, item.language}]++;
  for (const auto& [cell, count] : cell_counts) {
    if (count > 1) {
      violations.push_back({ViolationKind::Duplicate, cell.first, to_string(cell.second),
                            "appears " + std::to_string(count) + " times"});
    }
  }

  // Pairing grid: every qid must appear in every observed language.
  std::set<std::string> qids;
  std::set<Language> languages;
  for (const auto& item : raw_items) {
    if (item.qid.empty()) continue;
    qids.insert(item.qid);
    languages.insert(item.language);
  }
  for (const auto& qid : qids) {
    for (Language lang : languages) {
      if (!cell_counts.count({qid, lang})) {
        violations.push_back({ViolationKind::MissingCell, qid, to_string(lang),
                              "no item for this qid in this language"});
      }
    }
  }

  // Cross-language consistency: answer key, category, subtype fixed per qid.
  std::map<std::string, const QuestionItem*> reference;
  for (const auto& item : raw_items) {
    auto [it, inserted] = reference.try_emplace(item.qid, &item);
    if (inserted) continue;
    const QuestionItem& ref = *it->second;
    auto mismatch = [&](std::string detail) {
      violations.push_back({ViolationKind::FieldMismatch, item.qid,
                            to_string(item.language), std::move(detail)});
    };
    if (item.answer != ref.answer) {
      mismatch("answer key '" + item.answer + "' differs from '" + ref.answer + "' in " +
               to_string(ref.language));
    }
    if (item.category != ref.category) {
      mismatch(std::string("category ") + to_string(item.category) + " differs from " +
               to_string(ref.category) + " in " + to_string(ref.language));
    }
    if (item.subtype != ref.subtype) {
      mismatch("subtype '" + item.subtype + "' differs from '" + ref.subtype + "' in " +
               to_string(ref.language));
    }
  }

  return violations;
}

BenchmarkSet validate_benchmark(std::vector<QuestionItem> raw_items) {
  if (raw_items.empty()) {
    throw BenchmarkValidationError(
        {{ViolationKind::Malformed, "", "", "benchmark is empty"}});
  }
  auto violations = check_benchmark(raw_items);
  if (!violations.empty()) throw BenchmarkValidationError(std::move(violations));

  BenchmarkSet set;
  set.items = std::move(raw_items);
  std::sort(set.items.begin(), set.items.end(), [](const auto& a, const auto& b) {
    if (a.qid != b.qid) return a.qid < b.qid;
    return std::string_view(to_string(a.language)) < to_string(b.language);
  });
  for (const auto& item : set.items) set.languages.insert(item.language);
  for (const auto& item : set.items) {
    if (set.qids.empty() || set.qids.back() != item.qid) set.qids.push_back(item.qid);
  }
  std::sort(set.qids.begin(), set.qids.end());
  return set;
}

nlohmann::json outcome_to_json(const AnswerOutcome& outcome) {
  return {{"qid", outcome.qid},
          {"language", to_string(outcome.language)},
          {"predicted", prediction_label(outcome.predicted)},
          {"correct", outcome.correct},
          {"method", outcome.method},
          {"run_index", outcome.run_index}};
}

AnswerOutcome outcome_from_json(const nlohmann::json& j) {
  AnswerOutcome out;
  out.qid = j.at("qid").get<std::string>();
  auto lang = parse_language(j.at("language").get<std::string>());
  if (!lang) throw IoError("outcome has unknown language code");
  out.language = *lang;
  std::string predicted = j.at("predicted").get<std::string>();
  out.predicted = (predicted == "Abstain") ? Prediction{} : parse_choice(predicted);
  out.correct = j.at("correct").get<bool>();
  out.method = j.at("method").get<std::string>();
  out.run_index = j.at("run_index").get<int>();
  return out;
}

nlohmann::json question_to_json(const QuestionItem& item) {
  nlohmann::json options = nlohmann::json::object();
  for (const auto& [key, text] : item.options) options[key] = text;
  return {{"qid", item.qid},
          {"language", to_string(item.language)},
          {"category", to_string(item.category)},
          {"subtype", item.subtype},
          {"question", item.stem},
          {"options", options},
          {"answer", item.answer}};
}

QuestionItem question_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("benchmark line is not a JSON object");
  QuestionItem item;
  try {
    item.qid = j.value("qid", "");
    std::string lang_code = j.value("language", "");
    auto lang = parse_language(lang_code);
    if (!lang) throw IoError("unknown language code '" + lang_code + "'");
    item.language = *lang;
    std::string category_name = j.value("category", "");
    auto category = parse_category(category_name);
    if (!category) throw IoError("unknown category '" + category_name + "'");
    item.category = *category;
    item.subtype = j.value("subtype", "");
    item.stem = j.value("question", "");
    if (j.contains("options") && j.at("options").is_object()) {
      for (const auto& [key, value] : j.at("options").items()) {
        item.options[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    item.answer = j.value("answer", "");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed benchmark object: ") + e.what());
  }
  return item;
}

std::vector<QuestionItem> load_benchmark_jsonl(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<QuestionItem> items;
  auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    try {
      items.push_back(question_from_json(j));
    } catch (const IoError& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return items;
}

}  // namespace clara
