#include "clara/llm_gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "clara/util.hpp"

namespace clara {

const char* to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::uint64_t prompt_fingerprint(std::span<const ChatMessage> messages) {
  std::uint64_t h = kFnvOffset;
  for (const auto& m : messages) {
    h = fnv1a64(to_string(m.role), h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(m.content, h);
    h = fnv1a64(std::string_view("\x1e", 1), h);
  }
  return h;
}

std::uint64_t response_fingerprint(std::string_view text) { return fnv1a64(text); }

void ScriptedBackend::add(std::uint64_t fingerprint, std::string response) {
  script_[fingerprint] = std::move(response);
}

void ScriptedBackend::add(std::span<const ChatMessage> messages, std::string response) {
  add(prompt_fingerprint(messages), std::move(response));
}

ScriptedBackend ScriptedBackend::from_jsonl(const std::filesystem::path& path, bool strict) {
  ScriptedBackend backend(strict);
  auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (!j.contains("response")) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": missing \"response\"");
    }
    std::string response = j.at("response").get<std::string>();
    if (j.contains("fingerprint")) {
      std::uint64_t fp = std::strtoull(j.at("fingerprint").get<std::string>().c_str(), nullptr, 16);
      backend.add(fp, std::move(response));
    } else if (j.contains("messages")) {
      std::vector<ChatMessage> messages;
      for (const auto& mj : j.at("messages")) {
        ChatMessage m;
        std::string role = mj.value("role", "user");
        m.role = role == "system" ? Role::System
                                  : role == "assistant" ? Role::Assistant : Role::User;
        m.content = mj.value("content", "");
        messages.push_back(std::move(m));
      }
      backend.add(messages, std::move(response));
    } else {
      throw IoError(path.string() + ":" + std::to_string(i + 1) +
                    ": entry needs \"fingerprint\" or \"messages\"");
    }
  }
  return backend;
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                      const CompletionParams&) {
  std::uint64_t fp = prompt_fingerprint(messages);
  auto it = script_.find(fp);
  if (it != script_.end()) return it->second;
  if (strict_) {
    std::string tail = messages.empty() ? std::string("<no messages>")
                                        : messages.back().content.substr(0, 160);
    throw ScriptMissError("scripted backend has no entry for fingerprint " + to_hex16(fp) +
                          " (last message starts: \"" + tail + "\")");
  }
  return default_;
}

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    if (const char* env = std::getenv("CLARA_LLM_API_KEY")) options_.api_key = env;
  }
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages,
                                      const CompletionParams& params) {
  nlohmann::json body;
  body["model"] = params.model_name;
  body["temperature"] = params.temperature;
  auto msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  std::string payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= options_.transport_retries; ++attempt) {
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(0, options_.timeout_ms * 1000LL);
    client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.api_key);
    }
    auto res = client.Post("/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("unparseable completion body: ") + e.what();
      }
    }
    if (attempt < options_.transport_retries) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
    }
  }
  throw BackendUnavailableError("chat backend unavailable after " +
                                std::to_string(options_.transport_retries + 1) +
                                " attempt(s): " + last_error);
}

namespace {

// Byte offset of the '}' closing the object that opens at `open`, tracking
// string literals and escapes; npos when the braces never balance.
std::size_t find_balanced_close(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> extract_json_object(std::string_view text,
                                                  const std::set<std::string>& expected_keys) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    std::size_t close = find_balanced_close(text, open);
    if (close == std::string_view::npos) continue;
    nlohmann::json candidate = nlohmann::json::parse(
        text.substr(open, close - open + 1), nullptr, /*allow_exceptions=*/false);
    if (candidate.is_discarded() || !candidate.is_object()) continue;
    bool has_all = true;
    for (const auto& key : expected_keys) {
      if (!candidate.contains(key)) {
        has_all = false;
        break;
      }
    }
    if (has_all) return candidate;
  }
  return std::nullopt;
}

std::string LlmGateway::complete(const std::vector<ChatMessage>& messages,
                                 const CompletionParams& params) {
  if (messages.empty()) throw ClaraError("complete requires at least one message");
  for (const auto& m : messages) {
    if (m.role != Role::Assistant && trim(m.content).empty()) {
      throw ClaraError("system/user messages must carry non-empty content");
    }
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  return backend_->complete(messages, params);
}

std::optional<nlohmann::json> LlmGateway::complete_structured(
    const std::vector<ChatMessage>& messages, const CompletionParams& params,
    const std::set<std::string>& expected_keys, int max_retries, StructuredCallLog* log) {
  std::vector<ChatMessage> attempt_messages = messages;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    StructuredCallLog::Attempt record;
    record.prompt_fingerprint = prompt_fingerprint(attempt_messages);
    std::string text;
    try {
      text = complete(attempt_messages, params);
    } catch (...) {
      if (log) log->attempts.push_back(std::move(record));
      throw;
    }
    record.response_fingerprint = response_fingerprint(text);
    record.raw = text;
    if (log) log->attempts.push_back(std::move(record));
    if (auto parsed = extract_json_object(text, expected_keys)) return parsed;
    if (attempt == max_retries) break;
    std::string keys;
    for (const auto& key : expected_keys) {
      if (!keys.empty()) keys += ", ";
      keys += "\"" + key + "\"";
    }
    attempt_messages.push_back(
        {Role::User, "Your previous reply could not be parsed. Respond again with a single "
                     "JSON object containing the key(s) " + keys + " and nothing else."});
  }
  return std::nullopt;
}

}  // namespace clara
