#pragma once

/// Uniform chat-completion port: a deterministic scripted backend for tests,
/// an OpenAI-compatible HTTP adapter for live runs, and structured-answer
/// parsing with bounded retries.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "clara/errors.hpp"

namespace clara {

enum class Role { System, User, Assistant };

const char* to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

struct CompletionParams {
  std::string model_name = "gpt-4";
  double temperature = 0.0;  // evaluation protocol runs at temperature 0
  int max_output_tokens = 1024;
  std::string seed_note;
};

// Prompt fingerprint: FNV-1a 64-bit over the role-tagged concatenation of the
// messages. Per message the hashed bytes are
//   <role-name> 0x1f <content> 0x1e
// with role-name one of "system"/"user"/"assistant". Fixture scripts can be
// authored by hand by reimplementing this five-line loop.
std::uint64_t prompt_fingerprint(std::span<const ChatMessage> messages);
std::uint64_t response_fingerprint(std::string_view text);

/// Transport-level port. Implementations must be safe for concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const CompletionParams& params) = 0;
};

/// Canned responses keyed by prompt fingerprint. In strict mode an unmatched
/// fingerprint throws ScriptMissError carrying the fingerprint; non-strict
/// falls back to a configurable default response. Immutable once handed to a
/// gateway, so concurrent reads need no locking.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(bool strict = true) : strict_(strict) {}

  void add(std::uint64_t fingerprint, std::string response);
  void add(std::span<const ChatMessage> messages, std::string response);
  void set_default_response(std::string response) { default_ = std::move(response); }

  /// JSONL, one entry per line, either
  ///   {"fingerprint":"<16 hex digits>","response":"..."}
  /// or {"messages":[{"role":"user","content":"..."},...],"response":"..."}
  static ScriptedBackend from_jsonl(const std::filesystem::path& path, bool strict = true);

  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompletionParams& params) override;

  std::size_t size() const { return script_.size(); }

 private:
  std::unordered_map<std::uint64_t, std::string> script_;
  bool strict_;
  std::string default_;
};

/// Callback-driven backend for tests that need behavior, not a fixed script
/// (always-reject critics, adversarial garbage, fault injection).
class RuleBackend : public ChatBackend {
 public:
  using Rule = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit RuleBackend(Rule rule) : rule_(std::move(rule)) {}
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompletionParams&) override {
    return rule_(messages);
  }

 private:
  Rule rule_;
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. "http://localhost:8080/v1"
  std::string api_key;   // empty: read from CLARA_LLM_API_KEY
  int timeout_ms = 30000;
  int transport_retries = 2;  // re-sends on transport failure, then gives up
};

/// OpenAI-compatible chat-completion client: POST {base_url}/chat/completions
/// with {"model","messages","temperature"}; reads choices[0].message.content.
/// Throws BackendUnavailableError once transport retries are exhausted.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompletionParams& params) override;

 private:
  HttpBackendOptions options_;
};

/// First syntactically valid JSON object in `text` that contains every key in
/// `expected_keys`. Candidates are balanced-brace spans tried in order of
/// their opening brace; string literals and escapes are honored while
/// balancing. Total for arbitrary bytes.
std::optional<nlohmann::json> extract_json_object(std::string_view text,
                                                  const std::set<std::string>& expected_keys);

/// Per-attempt record of one structured call, for traces and fallbacks.
struct StructuredCallLog {
  struct Attempt {
    std::uint64_t prompt_fingerprint = 0;
    std::uint64_t response_fingerprint = 0;
    std::string raw;  // backend text verbatim; empty if transport failed
  };
  std::vector<Attempt> attempts;
};

/// Counts every backend call (exact accounting for budget assertions).
/// Concurrency-safe; no ordering guarantee across concurrent calls.
class LlmGateway {
 public:
  explicit LlmGateway(std::shared_ptr<ChatBackend> backend)
      : backend_(std::move(backend)) {}

  /// Backend text verbatim. Propagates backend errors.
  std::string complete(const std::vector<ChatMessage>& messages,
                       const CompletionParams& params);

  /// Structured parse with bounded retries: on a parse miss the request is
  /// reissued with a corrective instruction appended, up to max_retries
  /// times. nullopt signals ParseExhausted; callers map it to Abstain.
  /// Never throws for any byte sequence the backend returns; transport
  /// errors propagate (with the failed attempt still logged).
  std::optional<nlohmann::json> complete_structured(const std::vector<ChatMessage>& messages,
                                                    const CompletionParams& params,
                                                    const std::set<std::string>& expected_keys,
                                                    int max_retries = 2,
                                                    StructuredCallLog* log = nullptr);

  std::uint64_t call_count() const { return calls_.load(); }
  ChatBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace clara
