#include "clara/clara_c.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "clara/engine.hpp"
#include "clara/errors.hpp"

using clara::Engine;

struct clara_engine {
  Engine engine;
  std::string last_error;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

clara_status classify(const std::exception& e) {
  if (dynamic_cast<const clara::PortError*>(&e)) return CLARA_ERR_PORT;
  if (dynamic_cast<const clara::ValidationError*>(&e)) return CLARA_ERR_VALIDATION;
  if (dynamic_cast<const clara::ConfigError*>(&e)) return CLARA_ERR_USAGE;
  if (dynamic_cast<const clara::IoError*>(&e)) return CLARA_ERR_IO;
  if (dynamic_cast<const clara::ClaraError*>(&e)) return CLARA_ERR_INTERNAL;
  return CLARA_ERR_INTERNAL;
}

template <typename Fn>
clara_status guarded(clara_engine* engine, Fn&& fn) {
  if (!engine) return CLARA_ERR_USAGE;
  engine->last_error.clear();
  try {
    return fn();
  } catch (const std::exception& e) {
    engine->last_error = e.what();
    return classify(e);
  } catch (...) {
    engine->last_error = "unknown error";
    return CLARA_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

clara_engine* clara_engine_new(const char* config_path, const char* const* overrides,
                               size_t n_overrides, char** err_out) {
  try {
    clara::Config config;
    if (config_path && config_path[0]) config.load_file(config_path);
    for (size_t i = 0; i < n_overrides; ++i) {
      if (overrides && overrides[i]) config.set_override(overrides[i]);
    }
    return new clara_engine{Engine(std::move(config)), {}};
  } catch (const std::exception& e) {
    if (err_out) *err_out = dup_string(e.what());
    return nullptr;
  }
}

void clara_engine_free(clara_engine* engine) { delete engine; }

const char* clara_engine_last_error(const clara_engine* engine) {
  return engine ? engine->last_error.c_str() : "";
}

clara_status clara_validate_benchmark(clara_engine* engine, const char* bench_path,
                                      char** report_json_out) {
  return guarded(engine, [&]() -> clara_status {
    if (!bench_path) return CLARA_ERR_USAGE;
    auto result = engine->engine.validate_bench(bench_path);
    put_out(report_json_out, result.summary_json);
    if (!result.ok) {
      engine->last_error = "benchmark validation failed (see report)";
      return CLARA_ERR_VALIDATION;
    }
    return CLARA_OK;
  });
}

clara_status clara_ingest_corpus(clara_engine* engine, const char* corpus_path,
                                 const char* index_path, long snippet_length, long overlap,
                                 char** stats_json_out) {
  return guarded(engine, [&]() -> clara_status {
    if (!corpus_path || !index_path) return CLARA_ERR_USAGE;
    auto result = engine->engine.ingest_corpus(corpus_path, index_path, snippet_length, overlap);
    put_out(stats_json_out, result.summary_json);
    return CLARA_OK;
  });
}

clara_status clara_run(clara_engine* engine, const char* bench_path, const char* method,
                       const char* out_dir, char** summary_json_out) {
  return guarded(engine, [&]() -> clara_status {
    if (!bench_path || !method || !out_dir) return CLARA_ERR_USAGE;
    auto result = engine->engine.run(bench_path, method, out_dir);
    put_out(summary_json_out, result.summary_json);
    return CLARA_OK;
  });
}

clara_status clara_render_report(clara_engine* engine, const char* outcomes_path,
                                 const char* formats, const char* out_dir,
                                 char** summary_json_out) {
  return guarded(engine, [&]() -> clara_status {
    if (!outcomes_path || !out_dir) return CLARA_ERR_USAGE;
    auto result = engine->engine.render_report(outcomes_path, formats ? formats : "", out_dir);
    put_out(summary_json_out, result.summary_json);
    return CLARA_OK;
  });
}

clara_status clara_engine_config_get(clara_engine* engine, const char* key, char** value_out) {
  return guarded(engine, [&]() -> clara_status {
    if (!key) return CLARA_ERR_USAGE;
    put_out(value_out, engine->engine.config().get(key));
    return CLARA_OK;
  });
}

char* clara_config_keys(void) {
  auto arr = nlohmann::json::array();
  for (const auto& def : clara::Config::key_defs()) {
    arr.push_back({{"key", def.name}, {"default", def.default_value}, {"help", def.help}});
  }
  return dup_string(arr.dump(2) + "\n");
}

const char* clara_version(void) { return "1.0.0"; }

void clara_string_free(char* s) { std::free(s); }

}  // extern "C"
