#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "clara/core_model.hpp"
#include "clara/pipeline.hpp"
#include "clara/util.hpp"
#include "support/test_support.hpp"

using namespace clara;

namespace {

QuestionItem pt_item() {
  QuestionItem item;
  item.qid = "q05";
  item.language = Language::PT;
  item.category = Category::ClinicalSurgical;
  item.subtype = "uveitis";
  item.stem = "Um paciente tem uveíte anterior aguda. Qual achado indica inflamação grave?";
  item.options = {{"A", "Hipópio"}, {"B", "Pinguécula"}, {"C", "Epífora"}, {"D", "Triquíase"}};
  item.answer = "A";
  return item;
}

QuestionItem en_item() {
  QuestionItem item;
  item.qid = "q05";
  item.language = Language::EN;
  item.category = Category::ClinicalSurgical;
  item.subtype = "uveitis";
  item.stem = "A patient has acute anterior uveitis. Which finding indicates severe inflammation?";
  item.options = {{"A", "Hypopyon"}, {"B", "Pinguecula"}, {"C", "Epiphora"}, {"D", "Trichiasis"}};
  item.answer = "A";
  return item;
}

// Agent-level scripting: dispatches on distinctive markers in the templates.
struct AgentScript {
  std::string translate = R"({"english_text": "A patient has acute anterior uveitis. Which finding indicates severe inflammation?\nA) Hypopyon\nB) Pinguecula\nC) Epiphora\nD) Trichiasis", "certainty": 0.9, "flagged_fragments": []})";
  std::string evaluate = R"({"translation_certainty": 0.9, "medical_certainty": 0.95, "uncertain_parts": [], "jargon_candidates": [], "needs_context": false})";
  std::string critique = R"({"sufficient": true, "keep": [1]})";
  std::string rewrite = R"({"rewritten": "rewritten question\nA) Hypopyon\nB) Pinguecula\nC) Epiphora\nD) Trichiasis"})";
  std::string answer = R"({"answer": "A"})";

  std::shared_ptr<RuleBackend> backend() const {
    AgentScript script = *this;
    return std::make_shared<RuleBackend>([script](const std::vector<ChatMessage>& messages) {
      const std::string& prompt = messages.front().content;
      if (prompt.find("medical translation agent") != std::string::npos) return script.translate;
      if (prompt.find("meta-cognitive evaluation agent") != std::string::npos) {
        return script.evaluate;
      }
      if (prompt.find("retrieval critic") != std::string::npos) return script.critique;
      if (prompt.find("question rewriting agent") != std::string::npos) return script.rewrite;
      return script.answer;
    });
  }
};

struct TestRig {
  std::shared_ptr<ChatBackend> backend;
  LlmGateway gateway;
  HashingEmbedder embedder;
  std::unique_ptr<VectorIndex> index;
  JargonDictionary dictionary;
  MockSearch search;
  PromptTemplates templates;

  explicit TestRig(std::shared_ptr<ChatBackend> chat, bool with_index = true)
      : backend(std::move(chat)),
        gateway(backend),
        embedder(256),
        dictionary(JargonDictionary::from_jsonl(test::jargon_path())),
        templates(PromptTemplates::load(test::templates_dir())) {
    if (with_index) {
      auto docs = load_corpus_jsonl(test::fixture_path("toy_corpus12.jsonl"));
      index = std::make_unique<VectorIndex>(build_index(docs, embedder, 200, 0));
    }
    search.add("uveitis", {{"Hypopyon and uveitis", "https://example.org/uveitis",
                            "hypopyon marks severe anterior chamber inflammation", 0}});
  }

  PipelinePorts ports() {
    PipelinePorts p;
    p.llm = &gateway;
    p.query_embedder = &embedder;
    p.index = index.get();
    p.dictionary = &dictionary;
    p.search = &search;
    p.templates = &templates;
    return p;
  }
};

PipelineConfig full_config() {
  PipelineConfig cfg;
  cfg.enable_translate = true;
  cfg.enable_websearch = true;
  cfg.enable_basic_rag = true;
  cfg.enable_corrective_rag = true;
  cfg.enable_rewrite = true;
  return cfg;
}

int calls_for_agent(const PipelineTrace& trace, const std::string& agent) {
  int n = 0;
  for (const auto& c : trace.calls) {
    if (c.agent == agent) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("fully-confident run: 3 calls for PT, 2 for EN (identity translate)") {
  AgentScript script;  // confident evaluate, direct answer
  {
    TestRig rig(script.backend());
    Pipeline pipeline(full_config(), rig.ports());
    auto result = pipeline.run(pt_item());
    CHECK(result.trace.llm_call_count == 3);  // translate + evaluate + answer
    CHECK(result.outcome.predicted == Choice::A);
    CHECK(result.outcome.correct);
    // Zero retrieval: no evidence, no critique iterations counted.
    CHECK(result.trace.evidence.empty());
  }
  {
    TestRig rig(script.backend());
    Pipeline pipeline(full_config(), rig.ports());
    auto result = pipeline.run(en_item());
    CHECK(result.trace.llm_call_count == 2);  // evaluate + answer
    bool translate_identity = false;
    for (const auto& t : result.trace.transitions) {
      if (t.state == PipelineState::Translate && t.note.find("identity") != std::string::npos) {
        translate_identity = true;
      }
    }
    CHECK(translate_identity);
  }
}

TEST_CASE("scripted PT translation fixture comes back verbatim") {
  // Exact-prompt scripting through the public prompt builders.
  auto templates = PromptTemplates::load(test::templates_dir());
  auto item = pt_item();
  auto backend = std::make_shared<ScriptedBackend>(true);
  std::string english =
      "A patient has acute anterior uveitis. Which finding indicates severe inflammation?";
  nlohmann::json translation = {
      {"english_text", english},
      {"certainty", 0.66},
      {"flagged_fragments",
       {{{"fragment", "severe inflammation"}, {"uncertainty", 0.4}}}}};
  backend->add(build_translate_prompt(templates, item), translation.dump());

  LlmGateway gateway(backend);
  StructuredCallLog log;
  auto parsed = gateway.complete_structured(build_translate_prompt(templates, item), {},
                                            {"english_text", "certainty"}, 0, &log);
  REQUIRE(parsed.has_value());
  CHECK(parsed->at("english_text") == english);
  CHECK(log.attempts.size() == 1);
}

TEST_CASE("routing table: thresholds and needs_context trigger retrieval") {
  PipelineConfig cfg;
  cfg.tau_translation = 0.7;
  cfg.tau_medical = 0.7;
  // Oracle: enumerate all combinations around the thresholds.
  const double levels[] = {0.0, 0.4, 0.69, 0.7, 0.71, 1.0};
  for (double tc : levels) {
    for (double mc : levels) {
      for (bool needs : {false, true}) {
        EvaluationResult eval;
        eval.translation_certainty = tc;
        eval.medical_certainty = mc;
        eval.needs_context = needs;
        bool expected = (tc < 0.7) || (mc < 0.7) || needs;
        CHECK(needs_retrieval(eval, cfg) == expected);
      }
    }
  }
}

TEST_CASE("bundle construction: weights clamp, jargon merges dictionary and LLM candidates") {
  HashingEmbedder embedder(64);
  auto dict = JargonDictionary::from_jsonl(test::jargon_path());
  EvaluationResult eval;
  eval.uncertain_parts = {{"severe inflammation", 1.7},   // clamps to 1
                          {"anterior chamber", -0.3},     // clamps to 0
                          {"   ", 0.5}};                  // blank: dropped
  eval.jargon_candidates = {"hypopyon", "not-a-term", "IOP"};
  std::string text = "acute anterior uveitis with hypopyon";
  auto bundle = build_query_bundle(eval, text, &dict, embedder);

  REQUIRE(bundle.parts.size() == 2);
  CHECK(bundle.parts[0].weight == 1.0);
  CHECK(bundle.parts[1].weight == 0.0);

  // Dictionary matches on the text: "anterior uveitis" (longest) + "hypopyon";
  // LLM candidates add "intraocular pressure" via the IOP alias; "hypopyon"
  // deduplicates; "not-a-term" drops.
  std::set<std::string> terms;
  for (const auto& j : bundle.jargon) terms.insert(j.term);
  CHECK(terms == std::set<std::string>{"anterior uveitis", "hypopyon", "intraocular pressure"});
  CHECK(select_rank_mode(bundle) == RankMode::Reweighted);

  bundle.jargon.clear();
  CHECK(select_rank_mode(bundle) == RankMode::Weighted);
  bundle.parts.clear();
  CHECK(select_rank_mode(bundle) == RankMode::BaseOnly);
}

TEST_CASE("jargon aligned with a snippet strictly raises its score") {
  HashingEmbedder embedder(128);
  VectorIndex index(128);
  Snippet aligned;
  aligned.snippet_id = "aligned";
  aligned.doc_id = "d";
  aligned.text = "inflammation of the uvea explained";
  aligned.vector = embedder.embed(aligned.text);
  index.add(aligned);

  QueryBundle bundle;
  bundle.full_query_text = "unrelated query";
  bundle.full_query_vector = embedder.embed(bundle.full_query_text);
  bundle.jargon.push_back(
      {"uveitis", aligned.text, 1.0, embedder.embed(aligned.text)});

  auto weighted = rank_with_addon(index, bundle, RankMode::Weighted, 1);
  auto reweighted = rank_with_addon(index, bundle, RankMode::Reweighted, 1);
  CHECK(reweighted[0].total > weighted[0].total);
  CHECK(reweighted[0].total == doctest::Approx(weighted[0].total + 1.0));
}

TEST_CASE("always-reject critic: exactly max_iterations per pass, rewrite once, closed-form calls") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [{"text": "finding", "uncertainty": 0.8}], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  auto cfg = full_config();
  Pipeline pipeline(cfg, rig.ports());

  auto before = rig.gateway.call_count();
  auto result = pipeline.run(pt_item());
  auto delta = rig.gateway.call_count() - before;

  CHECK(result.trace.critique_iterations == std::vector<int>{5, 5});
  CHECK(result.trace.rewrites_used == 1);
  CHECK(calls_for_agent(result.trace, "rewrite") == 1);
  CHECK(calls_for_agent(result.trace, "evaluate") == 2);
  CHECK(calls_for_agent(result.trace, "critique") == 10);
  int expected = call_ceiling(cfg, /*translate_runs=*/true, /*attempts_per_call=*/1);
  CHECK(expected == 15);
  CHECK(result.trace.llm_call_count == static_cast<std::uint64_t>(expected));
  CHECK(delta == result.trace.llm_call_count);  // trace/counter agreement
  // Nothing kept: the final prompt carries no evidence section.
  CHECK(result.trace.final_prompt.find("Reference evidence") == std::string::npos);
}

TEST_CASE("corrective disabled keeps all evidence without critic calls") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  TestRig rig(script.backend());
  auto cfg = full_config();
  cfg.enable_corrective_rag = false;
  cfg.enable_rewrite = false;
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(calls_for_agent(result.trace, "critique") == 0);
  CHECK_FALSE(result.trace.evidence.empty());
  for (const auto& e : result.trace.evidence) CHECK(e.accepted);
  // Single gathering pass: RAG and web both contribute.
  bool has_rag = false, has_web = false;
  for (const auto& e : result.trace.evidence) {
    has_rag |= e.origin == Evidence::Origin::Rag;
    has_web |= e.origin == Evidence::Origin::Web;
  }
  CHECK(has_rag);
  CHECK(has_web);
}

TEST_CASE("rewrite budget: second exhaustion answers without further rewrites") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  auto cfg = full_config();
  cfg.max_rewrites = 1;
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(result.trace.rewrites_used == 1);
  CHECK(result.trace.critique_iterations.size() == 2);  // no third pass
  CHECK(result.outcome.predicted == Choice::A);         // still answers
}

TEST_CASE("rewrite disabled skips the stage entirely") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  auto cfg = full_config();
  cfg.enable_rewrite = false;
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(result.trace.rewrites_used == 0);
  CHECK(calls_for_agent(result.trace, "rewrite") == 0);
  CHECK(result.trace.visited_states().count(PipelineState::Rewrite) == 0);
}

TEST_CASE("scripted rewrite: evaluate runs exactly twice across the run") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  Pipeline pipeline(full_config(), rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(calls_for_agent(result.trace, "evaluate") == 2);
}

TEST_CASE("unparseable translation falls back to the raw reply with certainty 0") {
  // Translate replies with prose (no JSON); every other agent behaves.
  AgentScript script;
  script.translate = "I think it means: a patient with acute anterior uveitis.";
  TestRig rig(script.backend());
  auto cfg = full_config();
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  // 3 translate attempts burned, then evaluate + answer still proceed.
  CHECK(calls_for_agent(result.trace, "translate") == 1 + cfg.max_retries);
  bool fallback_noted = false;
  for (const auto& t : result.trace.transitions) {
    if (t.state == PipelineState::Translate &&
        t.note.find("unparseable translation") != std::string::npos) {
      fallback_noted = true;
    }
  }
  CHECK(fallback_noted);
  // The raw reply becomes the working text seen by the evaluation prompt.
  bool evaluate_saw_raw = false;
  for (const auto& c : result.trace.calls) {
    if (c.agent != "evaluate") continue;
    auto prompt = build_evaluate_prompt(rig.templates, script.translate, Language::PT,
                                        TranslationResult{script.translate, 0.0, {}, false});
    evaluate_saw_raw |= c.prompt_fingerprint == prompt_fingerprint(prompt);
  }
  CHECK(evaluate_saw_raw);
}

TEST_CASE("answer: malformed responses exhaust retries into Abstain, scored incorrect") {
  auto backend = std::make_shared<RuleBackend>(
      [](const std::vector<ChatMessage>&) { return std::string("no json here"); });
  TestRig rig(backend, /*with_index=*/false);
  PipelineConfig cfg;  // direct: all flags off
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(en_item());
  CHECK_FALSE(result.outcome.predicted.has_value());
  CHECK_FALSE(result.outcome.correct);
  CHECK(result.trace.llm_call_count == 3);  // 1 + max_retries(2)
}

TEST_CASE("direct route: answer prompt contains zero evidence sections") {
  AgentScript script;
  TestRig rig(script.backend());
  Pipeline pipeline(full_config(), rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(result.trace.final_prompt.find("Reference evidence") == std::string::npos);
}

TEST_CASE("discarded evidence never reaches the final answer prompt") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  // Keep item 2, discard the rest, declare sufficiency.
  script.critique = R"({"sufficient": true, "keep": [2]})";
  TestRig rig(script.backend());
  Pipeline pipeline(full_config(), rig.ports());
  auto result = pipeline.run(pt_item());

  std::vector<std::string> discarded_texts, kept_texts;
  REQUIRE(result.trace.evidence.size() >= 2);
  for (const auto& e : result.trace.evidence) {
    // Resolve the snippet text through the index by id.
    for (const auto& s : rig.index->snippets()) {
      if (s.snippet_id == e.snippet_id) {
        (e.accepted ? kept_texts : discarded_texts).push_back(s.text);
      }
    }
  }
  REQUIRE(!kept_texts.empty());
  REQUIRE(!discarded_texts.empty());
  for (const auto& text : kept_texts) {
    CHECK(result.trace.final_prompt.find(text) != std::string::npos);
  }
  for (const auto& text : discarded_texts) {
    CHECK(result.trace.final_prompt.find(text) == std::string::npos);
  }
}

TEST_CASE("termination under adversarial garbage stays within the ceiling") {
  auto backend = std::make_shared<RuleBackend>(
      [](const std::vector<ChatMessage>&) { return std::string("%% garbage }{ %%"); });
  TestRig rig(backend);
  auto cfg = full_config();
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK_FALSE(result.outcome.predicted.has_value());
  int ceiling = call_ceiling(cfg, true, 1 + cfg.max_retries);
  CHECK(ceiling == 45);
  CHECK(result.trace.llm_call_count <= static_cast<std::uint64_t>(ceiling));
  CHECK(result.trace.transitions.back().state == PipelineState::Done);
}

TEST_CASE("backend unavailability degrades to Abstain with a complete trace") {
  class FlakyBackend : public ChatBackend {
   public:
    std::string complete(const std::vector<ChatMessage>&, const CompletionParams&) override {
      throw BackendUnavailableError("refused");
    }
  };
  TestRig rig(std::make_shared<FlakyBackend>());
  Pipeline pipeline(full_config(), rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK_FALSE(result.outcome.predicted.has_value());
  CHECK(result.trace.transitions.back().state == PipelineState::Done);
  CHECK(result.trace.llm_call_count == result.trace.calls.size());
}

TEST_CASE("script misses in strict mode abort the run") {
  auto backend = std::make_shared<ScriptedBackend>(true);  // empty script
  TestRig rig(std::move(backend));
  Pipeline pipeline(full_config(), rig.ports());
  CHECK_THROWS_AS(pipeline.run(pt_item()), ScriptMissError);
}

TEST_CASE("search unavailability never escapes the loop") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  UnavailableSearch down;
  auto ports = rig.ports();
  ports.search = &down;
  Pipeline pipeline(full_config(), ports);
  PipelineResult result;
  CHECK_NOTHROW(result = pipeline.run(pt_item()));
  CHECK(result.trace.critique_iterations == std::vector<int>{5, 5});
}

TEST_CASE("empty index degrades to the web fallback") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [], "jargon_candidates": [], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend(), /*with_index=*/false);
  Pipeline pipeline(full_config(), rig.ports());
  auto result = pipeline.run(pt_item());
  for (const auto& e : result.trace.evidence) {
    CHECK(e.origin == Evidence::Origin::Web);
  }
  CHECK(result.trace.visited_states().count(PipelineState::Retrieve) == 1);  // attempted
}

TEST_CASE("reachable states grow monotonically in every flag") {
  auto config_for_mask = [](unsigned mask) {
    PipelineConfig cfg;
    cfg.enable_translate = mask & 1;
    cfg.enable_websearch = mask & 2;
    cfg.enable_basic_rag = mask & 4;
    cfg.enable_corrective_rag = mask & 8;
    cfg.enable_rewrite = mask & 16;
    return cfg;
  };
  for (unsigned mask = 0; mask < 32; ++mask) {
    auto base = reachable_states(config_for_mask(mask));
    for (unsigned bit = 0; bit < 5; ++bit) {
      if (mask & (1u << bit)) continue;
      auto grown = reachable_states(config_for_mask(mask | (1u << bit)));
      for (const auto& state : base) {
        CHECK(grown.count(state) == 1);  // never removes states
      }
    }
  }
}

TEST_CASE("trace serialization is deterministic and visited states are reachable") {
  AgentScript script;
  script.evaluate =
      R"({"translation_certainty": 0.2, "medical_certainty": 0.3, "uncertain_parts": [{"text": "finding", "uncertainty": 0.8}], "jargon_candidates": ["hypopyon"], "needs_context": true})";
  script.critique = R"({"sufficient": false, "keep": []})";
  TestRig rig(script.backend());
  auto cfg = full_config();
  Pipeline pipeline(cfg, rig.ports());
  auto a = pipeline.run(pt_item()).trace.to_json().dump(2);
  auto b = pipeline.run(pt_item()).trace.to_json().dump(2);
  CHECK(a == b);

  auto result = pipeline.run(pt_item());
  auto reachable = reachable_states(cfg);
  for (const auto& state : result.trace.visited_states()) {
    CHECK(reachable.count(state) == 1);
  }
  auto j = result.trace.to_json();
  CHECK(j.at("trace_version") == 1);
  CHECK(j.at("llm_call_count").get<std::uint64_t>() == result.trace.llm_call_count);
}

TEST_CASE("web_toolcall shape: websearch only, original language, no evaluate") {
  AgentScript script;
  TestRig rig(script.backend(), /*with_index=*/false);
  rig.search.add("uveíte", {{"PT hit", "https://pt", "conteúdo", 0}});
  PipelineConfig cfg;
  cfg.enable_websearch = true;
  cfg.web_query_in_english = false;
  Pipeline pipeline(cfg, rig.ports());
  auto result = pipeline.run(pt_item());
  CHECK(calls_for_agent(result.trace, "evaluate") == 0);
  CHECK(result.trace.visited_states().count(PipelineState::WebSearch) == 1);
  CHECK(result.trace.llm_call_count == 1);  // just the answer call
}

}  // TEST_SUITE
