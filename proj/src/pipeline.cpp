#include "clara/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "clara/util.hpp"

namespace clara {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Lenient numeric extraction: non-numeric values fall back to `fallback`
// (rogue responses must never crash a run).
double json_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return std::stod(v.get<std::string>());
    } catch (...) {
      return fallback;
    }
  }
  return fallback;
}

bool json_bool(const nlohmann::json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    std::string s = ascii_lower(v.get<std::string>());
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no") return false;
  }
  return fallback;
}

std::string format2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string evidence_listing(std::span<const Evidence> batch) {
  if (batch.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += std::to_string(i + 1) + ". [" + to_string(batch[i].origin) + "] " +
           batch[i].snippet.text;
  }
  return out;
}

}  // namespace

const char* to_string(Evidence::Origin origin) {
  return origin == Evidence::Origin::Rag ? "rag" : "web";
}

const char* to_string(PipelineState state) {
  switch (state) {
    case PipelineState::Start: return "start";
    case PipelineState::Translate: return "translate";
    case PipelineState::Evaluate: return "evaluate";
    case PipelineState::Retrieve: return "retrieve";
    case PipelineState::WebSearch: return "web_search";
    case PipelineState::Critique: return "critique";
    case PipelineState::Rewrite: return "rewrite";
    case PipelineState::Answer: return "answer";
    case PipelineState::Done: return "done";
  }
  return "start";
}

std::set<PipelineState> PipelineTrace::visited_states() const {
  std::set<PipelineState> states;
  for (const auto& t : transitions) states.insert(t.state);
  return states;
}

nlohmann::json PipelineTrace::to_json(bool include_final_prompt) const {
  nlohmann::json j;
  j["trace_version"] = 1;
  j["qid"] = qid;
  j["language"] = to_string(language);
  j["method"] = method;
  j["run_index"] = run_index;
  auto transitions_json = nlohmann::json::array();
  for (const auto& t : transitions) {
    nlohmann::json tj = {{"step", t.step}, {"state", to_string(t.state)}};
    if (!t.note.empty()) tj["note"] = t.note;
    transitions_json.push_back(std::move(tj));
  }
  j["transitions"] = std::move(transitions_json);
  auto calls_json = nlohmann::json::array();
  for (const auto& c : calls) {
    calls_json.push_back({{"step", c.step},
                          {"agent", c.agent},
                          {"prompt_fingerprint", to_hex16(c.prompt_fingerprint)},
                          {"response_fingerprint", to_hex16(c.response_fingerprint)},
                          {"attempt", c.attempt}});
  }
  j["llm_calls"] = std::move(calls_json);
  auto evidence_json = nlohmann::json::array();
  for (const auto& e : evidence) {
    evidence_json.push_back({{"iteration", e.iteration},
                             {"origin", to_string(e.origin)},
                             {"snippet_id", e.snippet_id},
                             {"score", e.score},
                             {"accepted", e.accepted}});
  }
  j["evidence"] = std::move(evidence_json);
  j["critique_iterations"] = critique_iterations;
  j["rewrites_used"] = rewrites_used;
  j["llm_call_count"] = llm_call_count;
  j["final_answer"] = prediction_label(final_answer);
  j["correct"] = answer_correct;
  if (include_final_prompt) j["final_prompt"] = final_prompt;
  return j;
}

std::string render_question_text(const QuestionItem& item) {
  std::string out = item.stem;
  for (const char* key : {"A", "B", "C", "D"}) {
    auto it = item.options.find(key);
    if (it == item.options.end()) continue;
    out += "\n";
    out += key;
    out += ") ";
    out += it->second;
  }
  return out;
}

std::vector<ChatMessage> build_translate_prompt(const PromptTemplates& templates,
                                                const QuestionItem& item) {
  std::string prompt = templates.render("translate", {{"source_language", to_string(item.language)},
                                                      {"question", render_question_text(item)}});
  return {{Role::User, std::move(prompt)}};
}

std::vector<ChatMessage> build_evaluate_prompt(const PromptTemplates& templates,
                                               const std::string& question_text,
                                               Language source_language,
                                               const TranslationResult& translation) {
  std::string notes;
  if (!translation.identity) {
    notes = "The translation agent reported certainty " +
            format2(translation.declared_certainty);
    if (translation.flagged_fragments.empty()) {
      notes += " and flagged no fragments.\n";
    } else {
      notes += " and flagged these fragments:\n";
      for (const auto& f : translation.flagged_fragments) {
        notes += "- \"" + f.fragment + "\" (uncertainty " + format2(f.uncertainty) + ")\n";
      }
    }
  }
  std::string prompt = templates.render("evaluate", {{"source_language", to_string(source_language)},
                                                     {"translation_notes", notes},
                                                     {"question", question_text}});
  return {{Role::User, std::move(prompt)}};
}

std::vector<ChatMessage> build_critique_prompt(const PromptTemplates& templates,
                                               const std::string& question_text,
                                               std::span<const Evidence> batch) {
  std::string prompt = templates.render(
      "critique", {{"question", question_text}, {"evidence", evidence_listing(batch)}});
  return {{Role::User, std::move(prompt)}};
}

std::vector<ChatMessage> build_rewrite_prompt(const PromptTemplates& templates,
                                              const std::string& question_text) {
  std::string prompt = templates.render("rewrite", {{"question", question_text}});
  return {{Role::User, std::move(prompt)}};
}

std::vector<ChatMessage> build_answer_prompt(const PromptTemplates& templates,
                                             const std::string& question_text,
                                             std::span<const Evidence> kept) {
  std::string section;
  if (!kept.empty()) {
    section = "\nReference evidence:\n" + evidence_listing(kept) + "\n";
  }
  std::string prompt = templates.render(
      "answer", {{"question", question_text}, {"evidence_section", section}});
  return {{Role::User, std::move(prompt)}};
}

std::vector<ChatMessage> build_direct_prompt(const PromptTemplates& templates,
                                             const QuestionItem& item) {
  std::string prompt =
      templates.render("direct_cot", {{"question", render_question_text(item)}});
  return {{Role::User, std::move(prompt)}};
}

bool needs_retrieval(const EvaluationResult& eval, const PipelineConfig& config) {
  return eval.translation_certainty < config.tau_translation ||
         eval.medical_certainty < config.tau_medical || eval.needs_context;
}

RankMode select_rank_mode(const QueryBundle& bundle) {
  if (!bundle.jargon.empty()) return RankMode::Reweighted;
  if (!bundle.parts.empty()) return RankMode::Weighted;
  return RankMode::BaseOnly;
}

QueryBundle build_query_bundle(const EvaluationResult& eval, const std::string& working_text,
                               const JargonDictionary* dict, const Embedder& embedder) {
  QueryBundle bundle;
  bundle.full_query_text = working_text;
  bundle.full_query_vector = embedder.embed(working_text);
  for (const auto& part : eval.uncertain_parts) {
    if (trim(part.text).empty()) continue;
    bundle.parts.push_back({part.text, clamp01(part.uncertainty), embedder.embed(part.text)});
  }
  if (dict && !dict->empty()) {
    std::set<std::string> seen;
    auto add_term = [&](const JargonEntry& entry) {
      if (!seen.insert(entry.term).second) return;
      bundle.jargon.push_back(
          {entry.term, entry.expansion, entry.weight, embedder.embed(entry.expansion)});
    };
    for (const auto& match : identify_terms(working_text, *dict)) {
      if (const JargonEntry* entry = dict->lookup(match.term)) add_term(*entry);
    }
    for (const auto& candidate : eval.jargon_candidates) {
      if (const JargonEntry* entry = dict->lookup(candidate)) add_term(*entry);
    }
  }
  return bundle;
}

std::set<PipelineState> reachable_states(const PipelineConfig& config) {
  std::set<PipelineState> states = {PipelineState::Start, PipelineState::Answer,
                                    PipelineState::Done};
  bool knowledge = config.enable_basic_rag || config.enable_corrective_rag;
  if (config.enable_translate) states.insert(PipelineState::Translate);
  if (config.enable_websearch) states.insert(PipelineState::WebSearch);
  if (knowledge) {
    states.insert(PipelineState::Evaluate);
    if (config.enable_basic_rag) states.insert(PipelineState::Retrieve);
    if (config.enable_corrective_rag) states.insert(PipelineState::Critique);
    if (config.enable_rewrite && config.max_rewrites > 0) states.insert(PipelineState::Rewrite);
  }
  return states;
}

int call_ceiling(const PipelineConfig& config, bool translate_runs, int attempts_per_call) {
  bool knowledge = config.enable_basic_rag || config.enable_corrective_rag;
  int translate_calls = (config.enable_translate && translate_runs) ? 1 : 0;
  int agent_calls;
  if (knowledge) {
    int rewrites = config.enable_rewrite ? config.max_rewrites : 0;
    int per_pass = 1 + (config.enable_corrective_rag ? config.max_iterations : 0);
    agent_calls = translate_calls + (rewrites + 1) * per_pass + rewrites + 1;
  } else {
    agent_calls = translate_calls + 1;
  }
  return attempts_per_call * agent_calls;
}

Pipeline::Pipeline(PipelineConfig config, PipelinePorts ports)
    : config_(std::move(config)), ports_(ports) {
  if (!ports_.llm) throw PortError("pipeline requires an LLM gateway");
  if (!ports_.templates) throw PortError("pipeline requires prompt templates");
  if (!ports_.query_embedder) throw PortError("pipeline requires a query embedder");
  if (config_.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

namespace {

// Per-run mutable context; the Pipeline object itself stays const.
struct RunContext {
  const PipelineConfig& cfg;
  const PipelinePorts& ports;
  PipelineTrace trace;
  int step = 0;
  CompletionParams params;

  void enter(PipelineState state, std::string note = "") {
    trace.transitions.push_back({step++, state, std::move(note)});
  }

  // One structured agent call; every attempt is recorded in the trace.
  // Returns nullopt on parse exhaustion OR backend unavailability (the
  // stages degrade identically for both); other port errors propagate.
  std::optional<nlohmann::json> agent_call(const char* agent,
                                           const std::vector<ChatMessage>& messages,
                                           const std::set<std::string>& expected_keys,
                                           std::string* last_raw = nullptr) {
    StructuredCallLog log;
    std::optional<nlohmann::json> parsed;
    bool unavailable = false;
    try {
      parsed = ports.llm->complete_structured(messages, params, expected_keys,
                                              cfg.max_retries, &log);
    } catch (const BackendUnavailableError&) {
      unavailable = true;
    }
    for (std::size_t i = 0; i < log.attempts.size(); ++i) {
      trace.calls.push_back({step++, agent, log.attempts[i].prompt_fingerprint,
                             log.attempts[i].response_fingerprint, static_cast<int>(i + 1)});
    }
    if (last_raw && !log.attempts.empty()) *last_raw = log.attempts.back().raw;
    if (unavailable) {
      trace.transitions.back().note = "backend unavailable";
      return std::nullopt;
    }
    return parsed;
  }

  void log_evidence(const Evidence& e) {
    trace.evidence.push_back({e.iteration, e.origin, e.snippet.snippet_id, e.score, e.accepted});
  }
};

TranslationResult parse_translation(const nlohmann::json& j, const std::string& fallback_text) {
  TranslationResult result;
  if (j.contains("english_text") && j.at("english_text").is_string()) {
    result.english_text = j.at("english_text").get<std::string>();
  }
  if (trim(result.english_text).empty()) {
    result.english_text = fallback_text;
    result.declared_certainty = 0.0;
    return result;
  }
  result.declared_certainty = clamp01(json_number(j, "certainty", 0.0));
  if (j.contains("flagged_fragments") && j.at("flagged_fragments").is_array()) {
    for (const auto& fj : j.at("flagged_fragments")) {
      if (!fj.is_object() || !fj.contains("fragment") || !fj.at("fragment").is_string()) continue;
      TranslationResult::Fragment f;
      f.fragment = fj.at("fragment").get<std::string>();
      f.uncertainty = clamp01(json_number(fj, "uncertainty", 1.0));
      // Invariant: fragments are substrings of english_text; rogue ones drop.
      if (!f.fragment.empty() && result.english_text.find(f.fragment) != std::string::npos) {
        result.flagged_fragments.push_back(std::move(f));
      }
    }
  }
  return result;
}

EvaluationResult parse_evaluation(const nlohmann::json& j) {
  EvaluationResult eval;
  eval.translation_certainty = clamp01(json_number(j, "translation_certainty", 0.0));
  eval.medical_certainty = clamp01(json_number(j, "medical_certainty", 0.0));
  eval.needs_context = json_bool(j, "needs_context", true);
  if (j.contains("uncertain_parts") && j.at("uncertain_parts").is_array()) {
    for (const auto& pj : j.at("uncertain_parts")) {
      if (!pj.is_object() || !pj.contains("text") || !pj.at("text").is_string()) continue;
      eval.uncertain_parts.push_back(
          {pj.at("text").get<std::string>(), clamp01(json_number(pj, "uncertainty", 1.0))});
    }
  }
  if (j.contains("jargon_candidates") && j.at("jargon_candidates").is_array()) {
    for (const auto& cj : j.at("jargon_candidates")) {
      if (cj.is_string()) eval.jargon_candidates.push_back(cj.get<std::string>());
    }
  }
  return eval;
}

struct CritiqueVerdict {
  bool sufficient = false;
  std::set<std::size_t> keep;  // 1-based indices into the judged batch
};

CritiqueVerdict parse_critique(const nlohmann::json& j, std::size_t batch_size) {
  CritiqueVerdict verdict;
  verdict.sufficient = json_bool(j, "sufficient", false);
  if (j.contains("keep") && j.at("keep").is_array()) {
    for (const auto& kj : j.at("keep")) {
      if (!kj.is_number()) continue;  // "1.0" from a sloppy model still counts
      long long idx = static_cast<long long>(kj.get<double>());
      if (idx >= 1 && idx <= static_cast<long long>(batch_size)) {
        verdict.keep.insert(static_cast<std::size_t>(idx));
      }
    }
  }
  return verdict;
}

}  // namespace

PipelineResult Pipeline::run(const QuestionItem& item, const std::string& method_label,
                             int run_index) const {
  RunContext ctx{config_, ports_, {}, 0, {}};
  ctx.trace.qid = item.qid;
  ctx.trace.language = item.language;
  ctx.trace.method = method_label;
  ctx.trace.run_index = run_index;
  ctx.params.model_name = config_.model_name;
  ctx.params.temperature = config_.temperature;
  ctx.params.max_output_tokens = config_.max_output_tokens;

  const bool knowledge = config_.enable_basic_rag || config_.enable_corrective_rag;
  const bool any_component = config_.enable_translate || config_.enable_websearch || knowledge;

  ctx.enter(PipelineState::Start);

  const std::string original_text = render_question_text(item);
  TranslationResult translation;
  translation.english_text = original_text;
  translation.identity = true;

  // -- Translation agent --------------------------------------------------
  if (config_.enable_translate) {
    if (item.language == Language::EN) {
      ctx.enter(PipelineState::Translate, "identity: source already English");
    } else {
      ctx.enter(PipelineState::Translate);
      std::string last_raw;
      auto parsed = ctx.agent_call("translate", build_translate_prompt(*ports_.templates, item),
                                   {"english_text", "certainty"}, &last_raw);
      if (parsed) {
        translation = parse_translation(*parsed, last_raw);
        translation.identity = false;
      } else {
        // Parse exhausted: fall back to the raw reply as the translation,
        // certainty 0, no fragments.
        translation.english_text = trim(last_raw).empty() ? original_text : last_raw;
        translation.declared_certainty = 0.0;
        translation.identity = false;
        ctx.trace.transitions.back().note = "fallback: unparseable translation";
      }
    }
  }

  std::string working = translation.english_text;
  std::vector<Evidence> kept;
  std::set<std::string> kept_ids;

  auto keep_evidence = [&](Evidence e) {
    if (!kept_ids.insert(e.snippet.snippet_id).second) return;
    kept.push_back(std::move(e));
  };

  auto web_batch = [&](const QueryBundle& bundle, RankMode mode, int iteration,
                       const std::string& query) {
    std::vector<Evidence> batch;
    std::vector<SearchResult> results;
    try {
      results = ports_.search ? ports_.search->search(query, config_.search_k)
                              : std::vector<SearchResult>{};
    } catch (const SearchUnavailableError&) {
      // Degraded: no useful information this iteration.
      ctx.trace.transitions.back().note = "search unavailable";
      return batch;
    }
    for (const auto& r : results) {
      Evidence e;
      e.origin = Evidence::Origin::Web;
      e.iteration = iteration;
      e.snippet.snippet_id = "web:" + to_hex16(fnv1a64(r.url)) + ":" + std::to_string(r.rank);
      e.snippet.doc_id = r.url;
      e.snippet.source = SnippetSource::Other;
      e.snippet.text = r.title.empty() ? r.snippet_text : r.title + ": " + r.snippet_text;
      e.snippet.vector = ports_.query_embedder->embed(e.snippet.text);
      e.score = cosine_sim(bundle.full_query_vector, e.snippet.vector) +
                addon_score(bundle, mode, e.snippet.vector);
      batch.push_back(std::move(e));
    }
    return batch;
  };

  if (knowledge) {
    // -- Evaluation / augmentation / critique, with one-shot rewrite -------
    int rewrites_left = config_.enable_rewrite ? config_.max_rewrites : 0;
    while (true) {
      ctx.enter(PipelineState::Evaluate);
      EvaluationResult eval;
      auto parsed = ctx.agent_call(
          "evaluate", build_evaluate_prompt(*ports_.templates, working, item.language, translation),
          {"translation_certainty", "medical_certainty", "needs_context"});
      if (parsed) {
        eval = parse_evaluation(*parsed);
      } else {
        // Conservative default: force retrieval.
        ctx.trace.transitions.back().note = "fallback: conservative evaluation";
      }

      if (!needs_retrieval(eval, config_)) {
        ctx.trace.transitions.back().note = "confident: direct answer route";
        break;
      }

      ctx.trace.critique_iterations.push_back(0);
      QueryBundle bundle = build_query_bundle(eval, working, ports_.dictionary,
                                              *ports_.query_embedder);
      RankMode mode = select_rank_mode(bundle);
      const std::string web_query = config_.web_query_in_english ? working : original_text;

      bool sufficient = false;
      const int iterations = config_.enable_corrective_rag ? config_.max_iterations : 1;
      for (int iter = 1; iter <= iterations; ++iter) {
        std::vector<Evidence> batch;
        if (iter == 1 && config_.enable_basic_rag) {
          if (ports_.index && ports_.index->size() > 0) {
            ctx.enter(PipelineState::Retrieve, std::string("mode=") + to_string(mode));
            for (const auto& scored :
                 rank_with_addon(*ports_.index, bundle, mode, config_.top_k)) {
              Evidence e;
              e.origin = Evidence::Origin::Rag;
              e.iteration = iter;
              e.snippet = scored.snippet;
              e.score = scored.total;
              batch.push_back(std::move(e));
            }
          } else {
            // Empty index degrades to the web fallback.
            ctx.enter(PipelineState::Retrieve, "empty index: no snippets");
          }
        }
        const bool web_now =
            config_.enable_websearch &&
            (iter > 1 || !config_.enable_basic_rag || !config_.enable_corrective_rag);
        if (web_now) {
          ctx.enter(PipelineState::WebSearch);
          auto web = web_batch(bundle, mode, iter, web_query);
          for (auto& e : web) batch.push_back(std::move(e));
        }

        if (config_.enable_corrective_rag) {
          ctx.enter(PipelineState::Critique);
          ctx.trace.critique_iterations.back()++;
          CritiqueVerdict verdict;
          auto critique_parsed = ctx.agent_call(
              "critique", build_critique_prompt(*ports_.templates, working, batch),
              {"sufficient"});
          if (critique_parsed) {
            verdict = parse_critique(*critique_parsed, batch.size());
          } else {
            ctx.trace.transitions.back().note = "fallback: keep nothing";
          }
          for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i].accepted = verdict.keep.count(i + 1) > 0;
            ctx.log_evidence(batch[i]);
            if (batch[i].accepted) keep_evidence(batch[i]);
          }
          if (verdict.sufficient) {
            sufficient = true;
            break;
          }
        } else {
          // No critic: everything gathered is kept; sufficiency means
          // the batch was non-empty.
          for (auto& e : batch) {
            e.accepted = true;
            ctx.log_evidence(e);
            keep_evidence(std::move(e));
          }
          sufficient = !kept.empty();
          break;
        }
      }

      if (sufficient) break;
      if (rewrites_left <= 0) break;

      // -- Question rewriting agent ---------------------------------------
      ctx.enter(PipelineState::Rewrite);
      --rewrites_left;
      auto rewrite_parsed = ctx.agent_call(
          "rewrite", build_rewrite_prompt(*ports_.templates, working), {"rewritten"});
      std::string rewritten;
      if (rewrite_parsed && rewrite_parsed->contains("rewritten") &&
          rewrite_parsed->at("rewritten").is_string()) {
        rewritten = rewrite_parsed->at("rewritten").get<std::string>();
      }
      if (trim(rewritten).empty()) {
        ctx.trace.transitions.back().note = "fallback: rewrite skipped";
        break;
      }
      working = rewritten;
      ctx.trace.rewrites_used++;
    }
  } else if (config_.enable_websearch) {
    // -- Standalone web tool call (no critic): search once, keep all -------
    ctx.enter(PipelineState::WebSearch);
    QueryBundle bundle;
    bundle.full_query_text = working;
    bundle.full_query_vector = ports_.query_embedder->embed(working);
    const std::string web_query = config_.web_query_in_english ? working : original_text;
    for (auto& e : web_batch(bundle, RankMode::BaseOnly, 1, web_query)) {
      e.accepted = true;
      ctx.log_evidence(e);
      keep_evidence(std::move(e));
    }
  }

  // -- Final answer ---------------------------------------------------------
  ctx.enter(PipelineState::Answer);
  std::string question_for_prompt = working;
  if (knowledge && ports_.dictionary && !ports_.dictionary->empty()) {
    auto matches = identify_terms(working, *ports_.dictionary);
    question_for_prompt = annotate_inline(working, matches, *ports_.dictionary).text;
  }
  std::vector<ChatMessage> answer_messages =
      any_component ? build_answer_prompt(*ports_.templates, question_for_prompt, kept)
                    : build_direct_prompt(*ports_.templates, item);
  ctx.trace.final_prompt = answer_messages.front().content;

  Prediction predicted;
  if (auto parsed = ctx.agent_call("answer", answer_messages, {"answer"})) {
    if (parsed->contains("answer") && parsed->at("answer").is_string()) {
      predicted = parse_choice(parsed->at("answer").get<std::string>());
    }
  }
  ctx.enter(PipelineState::Done, predicted.has_value() ? "" : "abstain");

  ctx.trace.final_answer = predicted;
  ctx.trace.answer_correct =
      predicted.has_value() && parse_choice(item.answer).has_value() &&
      *predicted == item.answer_key();
  // Count from this run's own log: under concurrency the shared gateway
  // counter interleaves other runs. Sequentially the two always agree.
  ctx.trace.llm_call_count = ctx.trace.calls.size();

  AnswerOutcome outcome;
  outcome.qid = item.qid;
  outcome.language = item.language;
  outcome.predicted = predicted;
  outcome.correct = ctx.trace.answer_correct;
  outcome.method = method_label;
  outcome.run_index = run_index;
  return {std::move(outcome), std::move(ctx.trace)};
}

}  // namespace clara
