#pragma once

/// Runs methods over a validated benchmark, aggregates accuracy by language
/// and category, computes gaps vs English, averages over repeated runs, and
/// emits deterministic reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clara/core_model.hpp"
#include "clara/pipeline.hpp"

namespace clara {

enum class MethodKind { Direct, TranslateCot, WebToolcall, Clara, Ablation };

/// "direct", "translate_cot", "web_toolcall", "clara", "ablation".
std::optional<MethodKind> parse_method(std::string_view name);
const char* to_string(MethodKind kind);

struct MethodSpec {
  std::string name;  // label carried on outcomes and reports
  MethodKind kind = MethodKind::Direct;
  PipelineConfig pipeline;
  int runs = 8;  // evaluation protocol averages over 8 runs
};

/// Applies the method's component flags onto a base pipeline config:
/// direct = all flags off; translate_cot = translate only; web_toolcall =
/// web search only with original-language queries; clara = everything;
/// ablation row N = the first N of translate / websearch / basic_rag /
/// corrective_rag / rewrite.
MethodSpec make_method_spec(MethodKind kind, const PipelineConfig& base, int runs,
                            int ablation_row = 5);

/// Human-readable component echo, e.g. "translate+web+basic_rag".
std::string components_label(const PipelineConfig& config);

struct RunOutput {
  std::vector<AnswerOutcome> outcomes;  // sorted by (qid, language, run)
  std::vector<PipelineTrace> traces;    // same order
  std::uint64_t llm_calls = 0;
};

/// Answers every item once per run index. Items may be evaluated
/// concurrently (bounded worker pool); results are folded back in
/// (qid, language, run) order so output is deterministic regardless of
/// completion order. Per-item failures become Abstain outcomes; only port
/// misconfiguration (e.g. a script gap in strict mode) aborts.
RunOutput run_method(const BenchmarkSet& set, const MethodSpec& spec,
                     const PipelinePorts& ports, int parallelism = 1);

struct OutcomeFilter {
  std::optional<Language> language;
  std::optional<Category> category;
};

/// 100 * correct / total within the filter, averaged over run indices.
/// Abstain counts as incorrect, never excluded. Throws EmptyFilterError when
/// nothing matches; category filters need the qid->category lookup.
double accuracy(std::span<const AnswerOutcome> outcomes, const OutcomeFilter& filter,
                const std::map<std::string, Category>* category_by_qid = nullptr);

/// gap(L) = round1(mean(L) - mean(EN)) on unrounded means; gap(EN) = 0.
/// Throws MissingEnglishRowError when the EN mean is absent.
std::map<Language, double> gap_vs_english(const std::map<Language, double>& mean_by_language);

struct ReportCell {
  double mean = 0.0;  // unrounded percent
  std::vector<double> per_run;
};

struct MethodReport {
  std::string method;
  int runs = 1;
  std::uint64_t llm_calls = 0;
  // filter key: "all", "basic", "clinical_surgical"
  std::map<std::string, std::map<Language, ReportCell>> cells;
};

struct EvalReport {
  std::vector<Language> languages;  // canonical order, those present
  std::vector<MethodReport> methods;  // sorted by method name
};

EvalReport build_report(std::span<const AnswerOutcome> outcomes,
                        const std::map<std::string, Category>& category_by_qid,
                        const std::map<std::string, std::uint64_t>& llm_calls_by_method = {});

enum class ReportFormat { Json, Csv, Markdown };

std::optional<ReportFormat> parse_report_format(std::string_view name);

/// Writes report.json / report.csv / report.md into out_dir for the selected
/// formats. Byte-deterministic for identical report values; an empty format
/// set writes nothing. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& out_dir);

std::string report_to_json_text(const EvalReport& report);
std::string report_to_csv_text(const EvalReport& report);
std::string report_to_markdown_text(const EvalReport& report);

}  // namespace clara
