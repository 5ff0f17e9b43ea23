#include "clara/harness.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "clara/util.hpp"

namespace clara {

std::optional<MethodKind> parse_method(std::string_view name) {
  std::string lower = ascii_lower(name);
  if (lower == "direct") return MethodKind::Direct;
  if (lower == "translate_cot" || lower == "translate-cot") return MethodKind::TranslateCot;
  if (lower == "web_toolcall" || lower == "web-toolcall") return MethodKind::WebToolcall;
  if (lower == "clara") return MethodKind::Clara;
  if (lower == "ablation") return MethodKind::Ablation;
  return std::nullopt;
}

const char* to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::Direct: return "direct";
    case MethodKind::TranslateCot: return "translate_cot";
    case MethodKind::WebToolcall: return "web_toolcall";
    case MethodKind::Clara: return "clara";
    case MethodKind::Ablation: return "ablation";
  }
  return "direct";
}

MethodSpec make_method_spec(MethodKind kind, const PipelineConfig& base, int runs,
                            int ablation_row) {
  MethodSpec spec;
  spec.kind = kind;
  spec.runs = runs;
  spec.pipeline = base;
  spec.pipeline.enable_translate = false;
  spec.pipeline.enable_websearch = false;
  spec.pipeline.enable_basic_rag = false;
  spec.pipeline.enable_corrective_rag = false;
  spec.pipeline.enable_rewrite = false;

  switch (kind) {
    case MethodKind::Direct:
      spec.name = "direct";
      break;
    case MethodKind::TranslateCot:
      spec.name = "translate_cot";
      spec.pipeline.enable_translate = true;
      break;
    case MethodKind::WebToolcall:
      spec.name = "web_toolcall";
      spec.pipeline.enable_websearch = true;
      spec.pipeline.web_query_in_english = false;  // original-language queries
      break;
    case MethodKind::Clara:
      spec.name = "clara";
      spec.pipeline.enable_translate = true;
      spec.pipeline.enable_websearch = true;
      spec.pipeline.enable_basic_rag = true;
      spec.pipeline.enable_corrective_rag = true;
      spec.pipeline.enable_rewrite = true;
      break;
    case MethodKind::Ablation: {
      if (ablation_row < 1 || ablation_row > 5) {
        throw ConfigError("ablation_row must be in 1..5, got " + std::to_string(ablation_row));
      }
      spec.name = "ablation_row" + std::to_string(ablation_row);
      spec.pipeline.enable_translate = ablation_row >= 1;
      spec.pipeline.enable_websearch = ablation_row >= 2;
      spec.pipeline.enable_basic_rag = ablation_row >= 3;
      spec.pipeline.enable_corrective_rag = ablation_row >= 4;
      spec.pipeline.enable_rewrite = ablation_row >= 5;
      break;
    }
  }
  return spec;
}

std::string components_label(const PipelineConfig& config) {
  std::string label;
  auto append = [&](bool enabled, const char* name) {
    if (!enabled) return;
    if (!label.empty()) label += "+";
    label += name;
  };
  append(config.enable_translate, "translate");
  append(config.enable_websearch, "web");
  append(config.enable_basic_rag, "basic_rag");
  append(config.enable_corrective_rag, "corrective_rag");
  append(config.enable_rewrite, "rewrite");
  return label.empty() ? "none" : label;
}

namespace {

std::size_t language_rank(Language lang) {
  for (std::size_t i = 0; i < kLanguageOrder.size(); ++i) {
    if (kLanguageOrder[i] == lang) return i;
  }
  return kLanguageOrder.size();
}

}  // namespace

RunOutput run_method(const BenchmarkSet& set, const MethodSpec& spec,
                     const PipelinePorts& ports, int parallelism) {
  if (spec.runs < 1) throw ConfigError("runs must be >= 1");
  if (parallelism < 1) parallelism = 1;

  Pipeline pipeline(spec.pipeline, ports);

  struct Task {
    const QuestionItem* item;
    int run_index;
  };
  std::vector<Task> tasks;
  tasks.reserve(set.items.size() * static_cast<std::size_t>(spec.runs));
  for (int run = 0; run < spec.runs; ++run) {
    for (const auto& item : set.items) tasks.push_back({&item, run});
  }

  std::vector<PipelineResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = pipeline.run(*tasks[i].item, spec.name, tasks[i].run_index);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    int n = std::min<int>(parallelism, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Single-consumer fold ordered by (qid, language, run): completion order
  // never shows in the output.
  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = results[a].outcome;
    const auto& ob = results[b].outcome;
    if (oa.qid != ob.qid) return oa.qid < ob.qid;
    if (oa.language != ob.language) return language_rank(oa.language) < language_rank(ob.language);
    return oa.run_index < ob.run_index;
  });

  RunOutput out;
  out.outcomes.reserve(results.size());
  out.traces.reserve(results.size());
  for (std::size_t i : order) {
    out.llm_calls += results[i].trace.llm_call_count;
    out.outcomes.push_back(std::move(results[i].outcome));
    out.traces.push_back(std::move(results[i].trace));
  }
  return out;
}

double accuracy(std::span<const AnswerOutcome> outcomes, const OutcomeFilter& filter,
                const std::map<std::string, Category>* category_by_qid) {
  if (filter.category.has_value() && !category_by_qid) {
    throw ClaraError("category filter requires a qid->category lookup");
  }
  std::map<int, std::pair<int, int>> per_run;  // run -> (correct, total)
  for (const auto& o : outcomes) {
    if (filter.language && o.language != *filter.language) continue;
    if (filter.category) {
      auto it = category_by_qid->find(o.qid);
      if (it == category_by_qid->end() || it->second != *filter.category) continue;
    }
    auto& [correct, total] = per_run[o.run_index];
    total += 1;
    if (o.correct) correct += 1;
  }
  if (per_run.empty()) throw EmptyFilterError("accuracy filter selected no outcomes");
  double sum = 0.0;
  for (const auto& [run, counts] : per_run) {
    sum += 100.0 * counts.first / counts.second;
  }
  return sum / static_cast<double>(per_run.size());
}

std::map<Language, double> gap_vs_english(const std::map<Language, double>& mean_by_language) {
  auto en = mean_by_language.find(Language::EN);
  if (en == mean_by_language.end()) {
    throw MissingEnglishRowError("gap computation requires an English row");
  }
  std::map<Language, double> gaps;
  for (const auto& [lang, mean] : mean_by_language) {
    gaps[lang] = round1(mean - en->second);
  }
  return gaps;
}

EvalReport build_report(std::span<const AnswerOutcome> outcomes,
                        const std::map<std::string, Category>& category_by_qid,
                        const std::map<std::string, std::uint64_t>& llm_calls_by_method) {
  EvalReport report;

  std::set<Language> present;
  std::set<std::string> method_names;
  std::map<std::string, std::set<int>> runs_by_method;
  for (const auto& o : outcomes) {
    present.insert(o.language);
    method_names.insert(o.method);
    runs_by_method[o.method].insert(o.run_index);
  }
  for (Language lang : kLanguageOrder) {
    if (present.count(lang)) report.languages.push_back(lang);
  }

  const std::pair<const char*, std::optional<Category>> filters[] = {
      {"all", std::nullopt},
      {"basic", Category::Basic},
      {"clinical_surgical", Category::ClinicalSurgical},
  };

  for (const auto& name : method_names) {
    MethodReport mr;
    mr.method = name;
    mr.runs = static_cast<int>(runs_by_method[name].size());
    if (auto it = llm_calls_by_method.find(name); it != llm_calls_by_method.end()) {
      mr.llm_calls = it->second;
    }
    std::vector<AnswerOutcome> mine;
    for (const auto& o : outcomes) {
      if (o.method == name) mine.push_back(o);
    }
    for (const auto& [filter_name, category] : filters) {
      for (Language lang : report.languages) {
        OutcomeFilter filter{lang, category};
        ReportCell cell;
        try {
          cell.mean = accuracy(mine, filter, &category_by_qid);
        } catch (const EmptyFilterError&) {
          continue;  // no items under this filter for this language
        }
        std::map<int, std::pair<int, int>> per_run;
        for (const auto& o : mine) {
          if (o.language != lang) continue;
          if (category) {
            auto it = category_by_qid.find(o.qid);
            if (it == category_by_qid.end() || it->second != *category) continue;
          }
          auto& [correct, total] = per_run[o.run_index];
          total += 1;
          if (o.correct) correct += 1;
        }
        for (const auto& [run, counts] : per_run) {
          cell.per_run.push_back(100.0 * counts.first / counts.second);
        }
        mr.cells[filter_name][lang] = std::move(cell);
      }
    }
    report.methods.push_back(std::move(mr));
  }
  return report;
}

namespace {

std::map<Language, double> filter_means(const MethodReport& mr, const std::string& filter) {
  std::map<Language, double> means;
  auto it = mr.cells.find(filter);
  if (it == mr.cells.end()) return means;
  for (const auto& [lang, cell] : it->second) means[lang] = cell.mean;
  return means;
}

}  // namespace

std::string report_to_json_text(const EvalReport& report) {
  nlohmann::json j;
  j["report_version"] = 1;
  auto langs = nlohmann::json::array();
  for (Language lang : report.languages) langs.push_back(to_string(lang));
  j["languages"] = std::move(langs);
  auto methods = nlohmann::json::array();
  for (const auto& mr : report.methods) {
    nlohmann::json mj;
    mj["method"] = mr.method;
    mj["runs"] = mr.runs;
    mj["llm_calls"] = mr.llm_calls;
    nlohmann::json accuracy_json = nlohmann::json::object();
    for (const auto& [filter_name, cells] : mr.cells) {
      nlohmann::json fj = nlohmann::json::object();
      auto means = filter_means(mr, filter_name);
      std::map<Language, double> gaps;
      if (means.count(Language::EN)) gaps = gap_vs_english(means);
      for (const auto& [lang, cell] : cells) {
        nlohmann::json cj;
        cj["mean"] = round1(cell.mean);
        auto per_run = nlohmann::json::array();
        for (double r : cell.per_run) per_run.push_back(round1(r));
        cj["per_run"] = std::move(per_run);
        if (auto git = gaps.find(lang); git != gaps.end()) cj["gap"] = git->second;
        fj[to_string(lang)] = std::move(cj);
      }
      accuracy_json[filter_name] = std::move(fj);
    }
    mj["accuracy"] = std::move(accuracy_json);
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

std::string report_to_csv_text(const EvalReport& report) {
  std::string csv = "method,filter,language,accuracy,gap,runs\n";
  const char* filter_order[] = {"all", "basic", "clinical_surgical"};
  for (const auto& mr : report.methods) {
    for (const char* filter_name : filter_order) {
      auto it = mr.cells.find(filter_name);
      if (it == mr.cells.end() || it->second.empty()) continue;
      auto means = filter_means(mr, filter_name);
      std::map<Language, double> gaps;
      if (means.count(Language::EN)) gaps = gap_vs_english(means);
      for (Language lang : report.languages) {
        auto cit = it->second.find(lang);
        if (cit == it->second.end()) continue;
        csv += mr.method;
        csv += ",";
        csv += filter_name;
        csv += ",";
        csv += to_string(lang);
        csv += ",";
        csv += format1(cit->second.mean);
        csv += ",";
        if (auto git = gaps.find(lang); git != gaps.end()) csv += format1(git->second);
        csv += ",";
        csv += std::to_string(mr.runs);
        csv += "\n";
      }
    }
  }
  return csv;
}

std::string report_to_markdown_text(const EvalReport& report) {
  std::string md = "# Evaluation report\n";
  const std::pair<const char*, const char*> sections[] = {
      {"all", "All questions"},
      {"basic", "Basic science questions"},
      {"clinical_surgical", "Clinical/surgical questions"},
  };
  for (const auto& [filter_name, title] : sections) {
    bool any = false;
    for (const auto& mr : report.methods) {
      auto it = mr.cells.find(filter_name);
      if (it != mr.cells.end() && !it->second.empty()) any = true;
    }
    if (!any) continue;
    md += "\n## ";
    md += title;
    md += "\n\n| Method |";
    for (Language lang : report.languages) {
      md += " ";
      md += to_string(lang);
      md += " |";
    }
    md += "\n|---|";
    for (std::size_t i = 0; i < report.languages.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& mr : report.methods) {
      auto it = mr.cells.find(filter_name);
      if (it == mr.cells.end() || it->second.empty()) continue;
      auto means = filter_means(mr, filter_name);
      std::map<Language, double> gaps;
      if (means.count(Language::EN)) gaps = gap_vs_english(means);
      md += "| " + mr.method + " |";
      for (Language lang : report.languages) {
        auto cit = it->second.find(lang);
        md += " ";
        md += (cit != it->second.end()) ? format1(cit->second.mean) : "-";
        md += " |";
      }
      md += "\n| _Gap_ |";
      for (Language lang : report.languages) {
        auto git = gaps.find(lang);
        md += " ";
        md += (git != gaps.end()) ? format1(git->second) : "-";
        md += " |";
      }
      md += "\n";
    }
  }
  return md;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  std::string lower = ascii_lower(trim(name));
  if (lower == "json") return ReportFormat::Json;
  if (lower == "csv") return ReportFormat::Csv;
  if (lower == "md" || lower == "markdown") return ReportFormat::Markdown;
  return std::nullopt;
}

std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  if (formats.count(ReportFormat::Json)) {
    auto path = out_dir / "report.json";
    write_file(path, report_to_json_text(report));
    written.push_back(path);
  }
  if (formats.count(ReportFormat::Csv)) {
    auto path = out_dir / "report.csv";
    write_file(path, report_to_csv_text(report));
    written.push_back(path);
  }
  if (formats.count(ReportFormat::Markdown)) {
    auto path = out_dir / "report.md";
    write_file(path, report_to_markdown_text(report));
    written.push_back(path);
  }
  return written;
}

}  // namespace clara
