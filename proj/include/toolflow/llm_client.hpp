#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/common.hpp"

namespace toolflow {

using json = nlohmann::json;

enum class Role { System, User, Assistant, Tool };

const char* to_string(Role role);
Role role_from_string(const std::string& name);

struct ToolCall {
    std::string id;
    std::string name;
    std::string arguments;  // JSON object text

    json to_json() const;
    static ToolCall from_json(const json& j);
};

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant messages only
    std::string tool_call_id;          // tool messages only
    std::string model;                 // provenance stamp, never sent on the wire

    json to_json() const;
    static ChatMessage from_json(const json& j);

    // Chat-completions wire shape (nested {"function": {...}} tool calls).
    json to_wire_json() const;
    static ChatMessage from_wire_json(const json& j);
};

struct GenerationParams {
    double temperature = 0.7;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
    std::string model;  // empty falls back to the backend default
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatMessage complete(const std::vector<ChatMessage>& messages,
                                 const GenerationParams& params,
                                 const std::vector<json>& tool_schemas) = 0;
    virtual std::string id() const = 0;
};

// Retries transient failures with exponential backoff, then validates the
// reply: tool calls must reference supplied schema names and carry JSON-object
// arguments. attempts_out (optional) reports how many calls were made.
ChatMessage complete_with_retry(ChatBackend& backend, const std::vector<ChatMessage>& messages,
                                const GenerationParams& params,
                                const std::vector<json>& tool_schemas,
                                const RetryPolicy& retry = {}, int* attempts_out = nullptr);

// Uniform seeded choice from a model pool.
std::string pick_model(const std::vector<std::string>& pool, std::uint64_t seed);

// True when every tool message answers exactly one prior assistant tool_call
// and no call id is answered twice.
bool tool_call_ids_correlate(const std::vector<ChatMessage>& messages);

struct ScriptEntry {
    std::string role_pattern;     // regex against the last message's role ("" matches any)
    std::string content_pattern;  // regex searched in the last message's content ("" matches any)
    ChatMessage response;
    int max_uses = 0;             // 0 = unlimited
};

// Deterministic mock driven by an ordered matcher script. Unmatched prompts
// raise a loud BackendError so tests never drift silently.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string id = "scripted-mock");
    static ScriptedBackend from_file(const std::string& path);

    ChatMessage complete(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                         const std::vector<json>& tool_schemas) override;
    std::string id() const override;
    int call_count() const;

private:
    struct Slot {
        ScriptEntry entry;
        int uses = 0;
    };
    // Mutable matcher state lives behind a pointer so the backend stays
    // movable while complete() remains callable from several workers.
    struct State {
        std::vector<Slot> slots;
        int calls = 0;
        std::mutex mutex;
    };
    std::unique_ptr<State> state_;
    std::string id_;
};

// Offline stand-in for a hosted model that understands the pipeline's own
// prompt layouts (plan requests, agent turns, tool simulation, judging,
// enrichment) and answers with deterministic rule-generated text.
class StructuredMockBackend : public ChatBackend {
public:
    explicit StructuredMockBackend(std::string id = "mock-structured");

    ChatMessage complete(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                         const std::vector<json>& tool_schemas) override;
    std::string id() const override;

private:
    std::string id_;
};

// Token-bucket limiter on a requests-per-minute budget. 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute = 0);
    void acquire();

private:
    double min_interval_s_ = 0.0;
    std::chrono::steady_clock::time_point next_allowed_;
    std::mutex mutex_;
};

// Client for an HTTP chat-completions endpoint. complete() performs a single
// attempt; callers wrap it in complete_with_retry.
class RemoteChatBackend : public ChatBackend {
public:
    RemoteChatBackend(std::string endpoint_url, std::string api_key, std::string default_model,
                      int requests_per_minute = 0, int timeout_s = 120);

    ChatMessage complete(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                         const std::vector<json>& tool_schemas) override;
    std::string id() const override;

private:
    std::string url_;
    std::string api_key_;
    std::string default_model_;
    int timeout_s_;
    RateLimiter limiter_;
};

struct HttpUrlParts {
    std::string host;
    int port = 80;
    std::string path = "/";
};

// Accepts plain-http URLs ("http://host[:port][/path]").
HttpUrlParts parse_http_url(const std::string& url);

}  // namespace toolflow
