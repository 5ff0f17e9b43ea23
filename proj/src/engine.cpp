#include "clara/engine.hpp"

#include <memory>

#include <nlohmann/json.hpp>

#include "clara/embedding.hpp"
#include "clara/jargon.hpp"
#include "clara/llm_gateway.hpp"
#include "clara/prompts.hpp"
#include "clara/util.hpp"
#include "clara/vector_index.hpp"
#include "clara/websearch.hpp"

namespace clara {

Engine::ValidateResult Engine::validate_bench(const std::filesystem::path& bench_path) const {
  auto items = load_benchmark_jsonl(bench_path);
  auto violations = check_benchmark(items);

  std::set<std::string> qids;
  std::set<Language> languages;
  for (const auto& item : items) {
    if (!item.qid.empty()) qids.insert(item.qid);
    languages.insert(item.language);
  }

  nlohmann::json j;
  j["qids"] = qids.size();
  j["languages"] = languages.size();
  j["items"] = items.size();
  j["valid"] = violations.empty() && !items.empty();
  auto vj = nlohmann::json::array();
  for (const auto& v : violations) vj.push_back(to_string(v));
  if (items.empty()) vj.push_back("malformed qid=? (benchmark is empty)");
  j["violations"] = std::move(vj);

  ValidateResult result;
  result.ok = violations.empty() && !items.empty();
  result.summary_json = j.dump(2) + "\n";
  return result;
}

namespace {

std::unique_ptr<Embedder> make_embedder(const Config& config) {
  std::string kind = ascii_lower(config.get("embedder"));
  if (kind == "hashing") {
    return std::make_unique<HashingEmbedder>(config.get_size("embed_dimension"));
  }
  if (kind == "http") {
    if (config.get("embedder_url").empty()) {
      throw PortError("embedder=http needs embedder_url; set it in the config file "
                      "or with --set embedder_url=...");
    }
    HttpEmbedderOptions options;
    options.url = config.get("embedder_url");
    options.dimension = config.get_size("embed_dimension");
    return std::make_unique<HttpEmbedder>(options);
  }
  throw ConfigError("embedder must be 'hashing' or 'http', got '" + config.get("embedder") + "'");
}

std::shared_ptr<ChatBackend> make_chat_backend(const Config& config) {
  std::string kind = ascii_lower(config.get("llm_backend"));
  if (kind == "scripted") {
    if (config.get("llm_script_path").empty()) {
      throw PortError("llm_backend=scripted needs llm_script_path; point it at a JSONL "
                      "script or switch to llm_backend=http");
    }
    return std::make_shared<ScriptedBackend>(
        ScriptedBackend::from_jsonl(config.get("llm_script_path"), config.get_bool("llm_strict")));
  }
  if (kind == "http") {
    if (config.get("llm_base_url").empty()) {
      throw PortError("llm_backend=http needs llm_base_url (an OpenAI-compatible endpoint)");
    }
    HttpBackendOptions options;
    options.base_url = config.get("llm_base_url");
    options.timeout_ms = config.get_int("llm_timeout_ms");
    options.transport_retries = config.get_int("llm_transport_retries");
    return std::make_shared<HttpChatBackend>(options);
  }
  throw ConfigError("llm_backend must be 'scripted' or 'http', got '" + config.get("llm_backend") +
                    "'");
}

std::unique_ptr<SearchPort> make_search_port(const Config& config) {
  std::string kind = ascii_lower(config.get("search_backend"));
  if (kind == "mock") {
    if (config.get("search_script_path").empty()) {
      return std::make_unique<MockSearch>();  // every query finds nothing
    }
    return std::make_unique<MockSearch>(
        MockSearch::from_jsonl(config.get("search_script_path")));
  }
  if (kind == "http") {
    if (config.get("search_url").empty()) {
      throw PortError("search_backend=http needs search_url");
    }
    HttpSearchOptions options;
    options.url = config.get("search_url");
    return std::make_unique<HttpSearch>(options);
  }
  throw ConfigError("search_backend must be 'mock' or 'http', got '" +
                    config.get("search_backend") + "'");
}

}  // namespace

Engine::IngestResult Engine::ingest_corpus(const std::filesystem::path& corpus_path,
                                           const std::filesystem::path& index_path,
                                           long snippet_length, long overlap) const {
  std::size_t length = snippet_length > 0 ? static_cast<std::size_t>(snippet_length)
                                          : config_.get_size("snippet_length");
  std::size_t over = overlap >= 0 ? static_cast<std::size_t>(overlap)
                                  : config_.get_size("overlap");
  auto docs = load_corpus_jsonl(corpus_path);
  if (docs.empty()) throw ValidationError("EmptyCorpus: " + corpus_path.string() + " has no documents");

  auto embedder = make_embedder(config_);
  IngestStats stats;
  VectorIndex index = build_index(docs, *embedder, length, over, &stats);
  index.save(index_path);

  nlohmann::json j;
  j["docs"] = stats.docs;
  j["snippets"] = stats.snippets;
  j["dimension"] = stats.dimension;
  j["index_path"] = index_path.string();
  j["snippet_length"] = length;
  j["overlap"] = over;

  IngestResult result;
  result.stats = stats;
  result.summary_json = j.dump(2) + "\n";
  return result;
}

Engine::RunResult Engine::run(const std::filesystem::path& bench_path,
                              const std::string& method_name,
                              const std::filesystem::path& out_dir) const {
  auto kind = parse_method(method_name);
  if (!kind) {
    throw ConfigError("unknown method '" + method_name +
                      "'; valid: direct, translate_cot, web_toolcall, clara, ablation");
  }

  BenchmarkSet set = validate_benchmark(load_benchmark_jsonl(bench_path));

  MethodSpec spec = make_method_spec(*kind, config_.pipeline_config(), config_.get_int("runs"),
                                     config_.get_int("ablation_row"));

  // Bind ports per config. The index is mandatory only for RAG methods.
  auto backend = make_chat_backend(config_);
  LlmGateway gateway(backend);
  auto embedder = make_embedder(config_);
  auto search = make_search_port(config_);

  std::unique_ptr<VectorIndex> index;
  if (spec.pipeline.enable_basic_rag) {
    std::string index_path = config_.get("index_path");
    if (index_path.empty() || !std::filesystem::exists(index_path)) {
      throw IndexRequiredError("method '" + spec.name +
                               "' needs a vector index; run ingest-corpus and set index_path");
    }
    index = std::make_unique<VectorIndex>(VectorIndex::load(index_path));
  }

  JargonDictionary dictionary;
  if (!config_.get("jargon_dictionary_path").empty()) {
    dictionary = JargonDictionary::from_jsonl(config_.get("jargon_dictionary_path"));
  }
  PromptTemplates templates = PromptTemplates::load(config_.get("templates_dir"));

  PipelinePorts ports;
  ports.llm = &gateway;
  ports.query_embedder = embedder.get();
  ports.index = index.get();
  ports.dictionary = &dictionary;
  ports.search = search.get();
  ports.templates = &templates;

  RunOutput output = run_method(set, spec, ports, config_.get_int("parallelism"));

  std::map<std::string, Category> category_by_qid;
  for (const auto& item : set.items) category_by_qid[item.qid] = item.category;

  RunResult result;

  // Raw outcomes (re-renderable without models).
  nlohmann::json outcomes_json;
  outcomes_json["trace_version"] = 1;
  outcomes_json["method"] = spec.name;
  outcomes_json["runs"] = spec.runs;
  outcomes_json["llm_calls"] = nlohmann::json::object();
  outcomes_json["llm_calls"][spec.name] = output.llm_calls;
  nlohmann::json categories = nlohmann::json::object();
  for (const auto& [qid, category] : category_by_qid) categories[qid] = to_string(category);
  outcomes_json["categories"] = std::move(categories);
  auto arr = nlohmann::json::array();
  for (const auto& o : output.outcomes) arr.push_back(outcome_to_json(o));
  outcomes_json["outcomes"] = std::move(arr);
  auto outcomes_path = out_dir / "outcomes.json";
  write_file(outcomes_path, outcomes_json.dump(2) + "\n");
  result.files.push_back(outcomes_path);

  // Per-run traces.
  bool full_text = config_.get_bool("trace_full_text");
  for (const auto& trace : output.traces) {
    auto trace_path = out_dir / "traces" /
                      (trace.qid + "_" + to_string(trace.language) + "_run" +
                       std::to_string(trace.run_index) + ".json");
    write_file(trace_path, trace.to_json(full_text).dump(2) + "\n");
  }

  // Reports.
  EvalReport report = build_report(output.outcomes, category_by_qid,
                                   {{spec.name, output.llm_calls}});
  for (const auto& path : emit_report(
           report, {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown}, out_dir)) {
    result.files.push_back(path);
  }

  nlohmann::json summary;
  summary["method"] = spec.name;
  summary["components"] = components_label(spec.pipeline);
  summary["runs"] = spec.runs;
  summary["items"] = set.items.size();
  summary["outcomes"] = output.outcomes.size();
  summary["llm_calls"] = output.llm_calls;
  auto files = nlohmann::json::array();
  for (const auto& f : result.files) files.push_back(f.string());
  summary["files"] = std::move(files);
  result.summary_json = summary.dump(2) + "\n";
  return result;
}

Engine::RunResult Engine::render_report(const std::filesystem::path& outcomes_path,
                                        const std::string& formats,
                                        const std::filesystem::path& out_dir) const {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(outcomes_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(outcomes_path.string() + ": " + e.what());
  }
  if (j.value("trace_version", 0) != 1) {
    throw VersionMismatchError(outcomes_path.string() + ": trace_version " +
                               std::to_string(j.value("trace_version", 0)) +
                               " is not supported (expected 1)");
  }

  std::vector<AnswerOutcome> outcomes;
  for (const auto& oj : j.value("outcomes", nlohmann::json::array())) {
    outcomes.push_back(outcome_from_json(oj));
  }
  std::map<std::string, Category> category_by_qid;
  const nlohmann::json categories = j.value("categories", nlohmann::json::object());
  for (const auto& [qid, name] : categories.items()) {
    auto category = parse_category(name.get<std::string>());
    if (category) category_by_qid[qid] = *category;
  }
  std::map<std::string, std::uint64_t> llm_calls;
  const nlohmann::json calls_by_method = j.value("llm_calls", nlohmann::json::object());
  for (const auto& [method, calls] : calls_by_method.items()) {
    llm_calls[method] = calls.get<std::uint64_t>();
  }

  std::set<ReportFormat> wanted;
  std::size_t start = 0;
  while (start <= formats.size()) {
    auto comma = formats.find(',', start);
    std::string_view piece(formats.data() + start,
                           (comma == std::string::npos ? formats.size() : comma) - start);
    piece = trim(piece);
    if (!piece.empty()) {
      auto format = parse_report_format(piece);
      if (!format) throw ConfigError("unknown report format '" + std::string(piece) + "'");
      wanted.insert(*format);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }

  EvalReport report = build_report(outcomes, category_by_qid, llm_calls);
  RunResult result;
  result.files = emit_report(report, wanted, out_dir);

  nlohmann::json summary;
  summary["outcomes"] = outcomes.size();
  auto files = nlohmann::json::array();
  for (const auto& f : result.files) files.push_back(f.string());
  summary["files"] = std::move(files);
  result.summary_json = summary.dump(2) + "\n";
  return result;
}

}  // namespace clara
