#pragma once

/// High-level operations behind the C API and the CLI: corpus ingestion,
/// benchmark validation, method runs, and report re-rendering. Each
/// operation binds ports from the configuration on demand.

#include <filesystem>
#include <string>
#include <vector>

#include "clara/config.hpp"
#include "clara/core_model.hpp"
#include "clara/harness.hpp"

namespace clara {

class Engine {
 public:
  explicit Engine(Config config) : config_(std::move(config)) {}

  const Config& config() const { return config_; }

  struct ValidateResult {
    bool ok = false;
    std::string summary_json;  // counts plus the violation list
  };
  /// IO/parse problems throw IoError; invariant violations are returned.
  ValidateResult validate_bench(const std::filesystem::path& bench_path) const;

  struct IngestResult {
    IngestStats stats;
    std::string summary_json;
  };
  /// snippet_length/overlap <= 0 fall back to the configured defaults.
  IngestResult ingest_corpus(const std::filesystem::path& corpus_path,
                             const std::filesystem::path& index_path, long snippet_length,
                             long overlap) const;

  struct RunResult {
    std::string summary_json;
    std::vector<std::filesystem::path> files;
  };
  /// Validates the benchmark, binds ports, answers every item runs times,
  /// writes outcomes.json, traces/ and report.{json,csv,md} under out_dir.
  RunResult run(const std::filesystem::path& bench_path, const std::string& method_name,
                const std::filesystem::path& out_dir) const;

  /// Re-renders reports from stored outcomes without re-running any model.
  /// formats is a comma-separated subset of "json,csv,md"; empty writes
  /// nothing and succeeds.
  RunResult render_report(const std::filesystem::path& outcomes_path,
                          const std::string& formats,
                          const std::filesystem::path& out_dir) const;

 private:
  Config config_;
};

}  // namespace clara
