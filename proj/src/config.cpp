#include "clara/config.hpp"

#include <cstdlib>

#include "clara/util.hpp"

namespace clara {

const std::vector<ConfigKeyDef>& Config::key_defs() {
  static const std::vector<ConfigKeyDef> defs = {
      {"model_name", "gpt-4", "model identifier passed to the chat backend (opaque)"},
      {"temperature", "0", "sampling temperature for every LLM call"},
      {"max_output_tokens", "1024", "completion token cap passed to the backend"},
      {"max_retries", "2", "structured-parse retries per agent call before Abstain"},
      {"llm_backend", "scripted", "chat backend: scripted | http"},
      {"llm_script_path", "", "JSONL script for the scripted backend"},
      {"llm_strict", "true", "scripted backend: error on unmatched prompt fingerprints"},
      {"llm_base_url", "", "base URL of an OpenAI-compatible /chat/completions endpoint"},
      {"llm_timeout_ms", "30000", "HTTP timeout for the live chat backend"},
      {"llm_transport_retries", "2", "transport-level retries for the live chat backend"},
      {"embedder", "hashing", "embedding port: hashing | http"},
      {"embed_dimension", "256", "dimension of the deterministic hashing embedder"},
      {"embedder_url", "", "URL of a live embedding service"},
      {"index_path", "", "vector index file produced by ingest-corpus"},
      {"jargon_dictionary_path", "", "JSONL ophthalmology dictionary"},
      {"templates_dir", "templates", "directory holding the six prompt templates"},
      {"search_backend", "mock", "web search port: mock | http"},
      {"search_script_path", "", "JSONL canned results for the mock search port"},
      {"search_url", "", "URL of a live search endpoint"},
      {"search_top_k", "3", "web results requested per search call"},
      {"web_query_language", "english", "web query language: english | original"},
      {"top_k", "5", "RAG snippets retrieved per augmentation"},
      {"max_iterations", "5", "critique-loop iteration limit per evaluation pass"},
      {"tau_translation", "0.7", "translation-certainty threshold that triggers retrieval"},
      {"tau_medical", "0.7", "medical-certainty threshold that triggers retrieval"},
      {"max_rewrites", "1", "question-rewrite budget per run"},
      {"runs", "8", "repeated runs to average over"},
      {"parallelism", "1", "worker threads for benchmark evaluation"},
      {"snippet_length", "200", "tokens per corpus snippet at ingestion"},
      {"overlap", "0", "token overlap between consecutive snippets"},
      {"ablation_row", "5", "ablation ladder row (1..5) used by method=ablation"},
      {"trace_full_text", "false", "include full prompts in serialized traces"},
      {"out_dir", "out", "default output directory for reports and traces"},
  };
  return defs;
}

Config::Config() {
  for (const auto& def : key_defs()) values_[def.name] = def.default_value;
}

std::string Config::help_text() {
  std::string out = "Configuration keys (key = default):\n";
  for (const auto& def : key_defs()) {
    out += "  ";
    out += def.name;
    out += " = ";
    out += def.default_value[0] ? def.default_value : "<empty>";
    out += "\n      ";
    out += def.help;
    out += "\n";
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) {
    std::string valid;
    for (const auto& def : key_defs()) {
      if (!valid.empty()) valid += ", ";
      valid += def.name;
    }
    throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
  }
  values_[key] = value;
}

void Config::set_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set(std::string(trim(assignment.substr(0, eq))),
      std::string(trim(assignment.substr(eq + 1))));
}

void Config::load_file(const std::filesystem::path& path) {
  auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(i + 1) +
                        ": expected 'key = value'");
    }
    try {
      set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::size_t Config::get_size(const std::string& key) const {
  int v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  std::string v = ascii_lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + get(key) + "'");
}

PipelineConfig Config::pipeline_config() const {
  PipelineConfig pc;
  pc.max_iterations = get_int("max_iterations");
  pc.top_k = get_size("top_k");
  pc.search_k = get_size("search_top_k");
  pc.tau_translation = get_double("tau_translation");
  pc.tau_medical = get_double("tau_medical");
  pc.max_rewrites = get_int("max_rewrites");
  pc.max_retries = get_int("max_retries");
  pc.model_name = get("model_name");
  pc.temperature = get_double("temperature");
  pc.max_output_tokens = get_int("max_output_tokens");
  std::string web_lang = ascii_lower(get("web_query_language"));
  if (web_lang != "english" && web_lang != "original") {
    throw ConfigError("web_query_language must be 'english' or 'original'");
  }
  pc.web_query_in_english = web_lang == "english";
  return pc;
}

}  // namespace clara
