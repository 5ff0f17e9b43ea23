#pragma once

/// The CLARA state machine: translation, dual-assessment evaluation,
/// knowledge-augmentation routing, bounded iterative critique with web
/// fallback, a one-shot rewrite, and a final structured answer.
///
/// One run is strictly sequential internally; distinct runs are independent
/// and may execute concurrently as long as the shared ports are
/// concurrency-safe. Every failure path degrades to Abstain with a complete
/// trace; only fixture gaps (ScriptMissError) and port misconfiguration
/// abort a run.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clara/core_model.hpp"
#include "clara/embedding.hpp"
#include "clara/jargon.hpp"
#include "clara/llm_gateway.hpp"
#include "clara/prompts.hpp"
#include "clara/relevance.hpp"
#include "clara/vector_index.hpp"
#include "clara/websearch.hpp"

namespace clara {

struct TranslationResult {
  std::string english_text;
  double declared_certainty = 1.0;  // in [0,1]
  struct Fragment {
    std::string fragment;  // substring of english_text
    double uncertainty = 0.0;
  };
  std::vector<Fragment> flagged_fragments;
  bool identity = false;  // source already English or translation disabled
};

struct EvaluationResult {
  double translation_certainty = 0.0;
  double medical_certainty = 0.0;
  struct Part {
    std::string text;
    double uncertainty = 0.0;
  };
  std::vector<Part> uncertain_parts;
  std::vector<std::string> jargon_candidates;
  bool needs_context = true;
};

struct Evidence {
  enum class Origin { Rag, Web };
  Origin origin = Origin::Rag;
  Snippet snippet;
  double score = 0.0;
  bool accepted = false;  // only accepted evidence enters the final prompt
  int iteration = 1;
};

const char* to_string(Evidence::Origin origin);

/// Component flags realize the ablation ladder; everything else is bounds
/// and thresholds. Defaults follow the evaluation protocol (temperature 0,
/// iteration limit 5, one rewrite).
struct PipelineConfig {
  bool enable_translate = false;
  bool enable_websearch = false;
  bool enable_basic_rag = false;
  bool enable_corrective_rag = false;
  bool enable_rewrite = false;
  int max_iterations = 5;    // critique loop bound per evaluation pass
  std::size_t top_k = 5;     // RAG snippets per retrieval
  std::size_t search_k = 3;  // web results per search call
  double tau_translation = 0.7;
  double tau_medical = 0.7;
  int max_rewrites = 1;
  int max_retries = 2;  // structured-parse retries per agent call
  bool web_query_in_english = true;
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_output_tokens = 1024;
};

enum class PipelineState {
  Start,
  Translate,
  Evaluate,
  Retrieve,
  WebSearch,
  Critique,
  Rewrite,
  Answer,
  Done
};

const char* to_string(PipelineState state);

/// Full decision/state log of one run. Timestamps are logical steps (a
/// single counter shared by transitions and calls) so scripted traces are
/// byte-identical across runs.
struct PipelineTrace {
  std::string qid;
  Language language = Language::EN;
  std::string method;
  int run_index = 0;

  struct Transition {
    int step = 0;
    PipelineState state = PipelineState::Start;
    std::string note;
  };
  struct Call {
    int step = 0;
    std::string agent;
    std::uint64_t prompt_fingerprint = 0;
    std::uint64_t response_fingerprint = 0;
    int attempt = 1;  // 1-based attempt index within one structured call
  };
  struct EvidenceLog {
    int iteration = 1;
    Evidence::Origin origin = Evidence::Origin::Rag;
    std::string snippet_id;
    double score = 0.0;
    bool accepted = false;
  };

  std::vector<Transition> transitions;
  std::vector<Call> calls;
  std::vector<EvidenceLog> evidence;
  std::vector<int> critique_iterations;  // one entry per evaluation pass
  int rewrites_used = 0;
  std::uint64_t llm_call_count = 0;
  Prediction final_answer;
  bool answer_correct = false;
  std::string final_prompt;  // answer-stage prompt, for string-level checks

  std::set<PipelineState> visited_states() const;
  nlohmann::json to_json(bool include_final_prompt = false) const;
};

struct PipelinePorts {
  LlmGateway* llm = nullptr;
  const Embedder* query_embedder = nullptr;
  const VectorIndex* index = nullptr;             // may be null (RAG disabled)
  const JargonDictionary* dictionary = nullptr;   // may be null
  SearchPort* search = nullptr;                   // may be null (web disabled)
  const PromptTemplates* templates = nullptr;
};

struct PipelineResult {
  AnswerOutcome outcome;
  PipelineTrace trace;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, PipelinePorts ports);

  PipelineResult run(const QuestionItem& item, const std::string& method_label = "",
                     int run_index = 0) const;

  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  PipelinePorts ports_;
};

// ---- Stage-level helpers, public so fixtures can author exact prompts ----

/// Stem plus the four options as "A) ..." lines.
std::string render_question_text(const QuestionItem& item);

std::vector<ChatMessage> build_translate_prompt(const PromptTemplates& templates,
                                                const QuestionItem& item);
std::vector<ChatMessage> build_evaluate_prompt(const PromptTemplates& templates,
                                               const std::string& question_text,
                                               Language source_language,
                                               const TranslationResult& translation);
std::vector<ChatMessage> build_critique_prompt(const PromptTemplates& templates,
                                               const std::string& question_text,
                                               std::span<const Evidence> batch);
std::vector<ChatMessage> build_rewrite_prompt(const PromptTemplates& templates,
                                              const std::string& question_text);
std::vector<ChatMessage> build_answer_prompt(const PromptTemplates& templates,
                                             const std::string& question_text,
                                             std::span<const Evidence> kept);
std::vector<ChatMessage> build_direct_prompt(const PromptTemplates& templates,
                                             const QuestionItem& item);

/// Retrieval is triggered when either certainty is below its threshold or the
/// evaluator asked for context.
bool needs_retrieval(const EvaluationResult& eval, const PipelineConfig& config);

/// Reweighted when any jargon term resolved, else weighted when any uncertain
/// part was flagged, else base-only retrieval on the full query.
RankMode select_rank_mode(const QueryBundle& bundle);

/// Parts from uncertain_parts (weights = clamped uncertainty); jargon from
/// dictionary matches on the text united with LLM candidates found in the
/// dictionary (weights from the dictionary).
QueryBundle build_query_bundle(const EvaluationResult& eval, const std::string& working_text,
                               const JargonDictionary* dict, const Embedder& embedder);

/// States reachable under a config, independent of any particular run.
/// Enabling a flag only ever adds states.
std::set<PipelineState> reachable_states(const PipelineConfig& config);

/// Closed-form ceiling on LLM calls for one run. attempts_per_call = 1 gives
/// the exact count when every structured call parses on its first attempt
/// and every critique loop runs to exhaustion; 1 + max_retries bounds any
/// backend behavior.
int call_ceiling(const PipelineConfig& config, bool translate_runs, int attempts_per_call);

}  // namespace clara
