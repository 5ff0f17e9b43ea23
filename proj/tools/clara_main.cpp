// Operator entry point. Binds config, ports, corpora and the harness through
// the shared-library C API; exit codes: 0 success, 1 IO/parse, 2 validation,
// 3 port failure.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clara/clara_c.h"

namespace {

int exit_code_for(clara_status status) {
  switch (status) {
    case CLARA_OK: return 0;
    case CLARA_ERR_IO: return 1;
    case CLARA_ERR_VALIDATION: return 2;
    case CLARA_ERR_PORT: return 3;
    case CLARA_ERR_USAGE: return 1;
    case CLARA_ERR_INTERNAL: return 1;
  }
  return 1;
}

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { clara_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct EngineHandle {
  clara_engine* ptr = nullptr;
  ~EngineHandle() { clara_engine_free(ptr); }
};

std::string config_key_footer() {
  OwnedString keys;
  keys.ptr = clara_config_keys();
  std::string footer = "Configuration keys (override with --set key=value):\n";
  auto arr = nlohmann::json::parse(keys.str(), nullptr, false);
  if (arr.is_discarded()) return footer;
  for (const auto& entry : arr) {
    std::string def = entry.value("default", "");
    footer += "  " + entry.value("key", "") + " = " + (def.empty() ? "<empty>" : def) + "\n    " +
              entry.value("help", "") + "\n";
  }
  return footer;
}

std::string engine_error(const EngineHandle& engine) {
  const char* message = clara_engine_last_error(engine.ptr);
  return message && message[0] ? message : "unknown error";
}

std::string config_value(const EngineHandle& engine, const char* key, const char* fallback) {
  OwnedString value;
  if (clara_engine_config_get(engine.ptr, key, &value.ptr) != CLARA_OK || !value.ptr) {
    return fallback;
  }
  return value.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clara - cross-lingual reflective agent engine and benchmark harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global -c/--set may follow the subcommand
  app.footer(config_key_footer());

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "config file with 'key = value' lines");
  app.add_option("--set", overrides, "override a config key (key=value, repeatable)");

  auto* ingest = app.add_subcommand("ingest-corpus", "chunk, embed and index a JSONL corpus");
  std::string corpus_path, index_out;
  long snippet_length = -1, overlap = -1;
  ingest->add_option("--corpus", corpus_path, "corpus JSONL file")->required();
  ingest->add_option("--out", index_out, "index file to write")->required();
  ingest->add_option("--snippet-length", snippet_length, "tokens per snippet (default: config)");
  ingest->add_option("--overlap", overlap, "token overlap between snippets (default: config)");

  auto* validate = app.add_subcommand("validate-bench", "check benchmark pairing invariants");
  std::string bench_path;
  validate->add_option("--bench", bench_path, "benchmark JSONL file")->required();

  auto* run = app.add_subcommand("run", "run a method over a benchmark and write reports");
  std::string run_bench, method, run_out;
  run->add_option("--bench", run_bench, "benchmark JSONL file")->required();
  run->add_option("--method", method,
                  "direct | translate_cot | web_toolcall | clara | ablation")
      ->required();
  run->add_option("--out", run_out, "output directory (default: config out_dir)");

  auto* report = app.add_subcommand("report", "re-render reports from stored outcomes");
  std::string outcomes_path, formats = "json,csv,md", report_out;
  report->add_option("--outcomes", outcomes_path, "outcomes.json from a previous run")->required();
  report->add_option("--formats", formats, "comma-separated subset of json,csv,md");
  report->add_option("--out", report_out, "output directory (default: config out_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are IO/parse-class failures
  }

  std::vector<const char*> override_ptrs;
  override_ptrs.reserve(overrides.size());
  for (const auto& o : overrides) override_ptrs.push_back(o.c_str());

  EngineHandle engine;
  {
    OwnedString err;
    engine.ptr = clara_engine_new(config_path.empty() ? nullptr : config_path.c_str(),
                                  override_ptrs.data(), override_ptrs.size(), &err.ptr);
    if (!engine.ptr) {
      std::fprintf(stderr, "error: %s\n", err.str().c_str());
      return 1;
    }
  }

  if (ingest->parsed()) {
    OwnedString stats;
    clara_status status = clara_ingest_corpus(engine.ptr, corpus_path.c_str(), index_out.c_str(),
                                              snippet_length, overlap, &stats.ptr);
    if (status != CLARA_OK) {
      std::fprintf(stderr, "error: %s\n", engine_error(engine).c_str());
      return exit_code_for(status);
    }
    auto j = nlohmann::json::parse(stats.str());
    std::printf("docs=%llu snippets=%llu dimension=%llu\n",
                static_cast<unsigned long long>(j.value("docs", 0ull)),
                static_cast<unsigned long long>(j.value("snippets", 0ull)),
                static_cast<unsigned long long>(j.value("dimension", 0ull)));
    std::printf("index written to %s\n", j.value("index_path", "").c_str());
    return 0;
  }

  if (validate->parsed()) {
    OwnedString report_json;
    clara_status status =
        clara_validate_benchmark(engine.ptr, bench_path.c_str(), &report_json.ptr);
    if (status != CLARA_OK && status != CLARA_ERR_VALIDATION) {
      std::fprintf(stderr, "error: %s\n", engine_error(engine).c_str());
      return exit_code_for(status);
    }
    auto j = nlohmann::json::parse(report_json.str());
    std::printf("qids=%llu languages=%llu items=%llu\n",
                static_cast<unsigned long long>(j.value("qids", 0ull)),
                static_cast<unsigned long long>(j.value("languages", 0ull)),
                static_cast<unsigned long long>(j.value("items", 0ull)));
    for (const auto& v : j.value("violations", nlohmann::json::array())) {
      std::fprintf(stderr, "violation: %s\n", v.get<std::string>().c_str());
    }
    std::printf("%s\n", j.value("valid", false) ? "valid" : "invalid");
    return exit_code_for(status);
  }

  if (run->parsed()) {
    if (run_out.empty()) run_out = config_value(engine, "out_dir", "out");
    OwnedString summary;
    clara_status status =
        clara_run(engine.ptr, run_bench.c_str(), method.c_str(), run_out.c_str(), &summary.ptr);
    if (status != CLARA_OK) {
      std::fprintf(stderr, "error: %s\n", engine_error(engine).c_str());
      return exit_code_for(status);
    }
    auto j = nlohmann::json::parse(summary.str());
    std::printf("method=%s components=%s runs=%d items=%llu llm_calls=%llu\n",
                j.value("method", "").c_str(), j.value("components", "").c_str(),
                j.value("runs", 0),
                static_cast<unsigned long long>(j.value("items", 0ull)),
                static_cast<unsigned long long>(j.value("llm_calls", 0ull)));
    for (const auto& f : j.value("files", nlohmann::json::array())) {
      std::printf("wrote %s\n", f.get<std::string>().c_str());
    }
    return 0;
  }

  if (report->parsed()) {
    if (report_out.empty()) report_out = config_value(engine, "out_dir", "out");
    OwnedString summary;
    clara_status status = clara_render_report(engine.ptr, outcomes_path.c_str(), formats.c_str(),
                                              report_out.c_str(), &summary.ptr);
    if (status != CLARA_OK) {
      std::fprintf(stderr, "error: %s\n", engine_error(engine).c_str());
      return exit_code_for(status);
    }
    auto j = nlohmann::json::parse(summary.str());
    for (const auto& f : j.value("files", nlohmann::json::array())) {
      std::printf("wrote %s\n", f.get<std::string>().c_str());
    }
    return 0;
  }

  return 0;
}
