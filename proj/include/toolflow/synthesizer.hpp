#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/llm_client.hpp"
#include "toolflow/planner.hpp"
#include "toolflow/tool_catalog.hpp"

namespace toolflow {

enum class DialogueStatus { Complete, TurnLimit, Failed };

const char* to_string(DialogueStatus status);
DialogueStatus dialogue_status_from_string(const std::string& name);

// One marker emitted by the user agent per turn; the record that makes plan
// fidelity auditable after the fact.
struct ItemAdvance {
    int item_index = 0;
    bool finished = false;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::uint64_t master_seed = 0;
    long long attempt = -1;
    std::map<std::string, std::string> agent_models;
    std::string sampling;  // "graph" | "uniform" | "" for standalone runs
    bool plan_present = false;
    std::vector<int> subset_nodes;
    std::vector<ItemAdvance> item_advance;
    std::string pipeline_version = kPipelineVersion;
    std::int64_t started_unix = 0;
    std::int64_t finished_unix = 0;
    std::string error;  // failure cause when status == failed

    json to_json() const;
    static Provenance from_json(const json& j);
};

struct Dialogue {
    std::string id;
    std::vector<ToolSpec> tools;
    std::optional<DialoguePlan> plan;
    std::vector<ChatMessage> messages;
    DialogueStatus status = DialogueStatus::Failed;
    Provenance provenance;

    json to_json() const;
    static Dialogue from_json(const json& j);
};

struct AgentConfig {
    int turn_limit = 16;  // assistant messages
    int retries = 2;      // per-turn retries on malformed agent output
    GenerationParams user_params;
    GenerationParams assistant_params;
    GenerationParams tool_params;
    RetryPolicy retry_policy;
    std::string user_prompt_template;       // empty selects the built-in
    std::string user_improvise_template;
    std::string assistant_system_template;
    std::string tool_prompt_template;
};

struct AgentBackends {
    ChatBackend* user = nullptr;
    ChatBackend* assistant = nullptr;
    ChatBackend* tool = nullptr;
};

using Clock = std::function<std::int64_t()>;

// Runs the user/assistant/tool loop over a plan (or improvised requests when
// plan is null) until the user agent marks everything finished or the
// assistant turn limit is hit. Backend failures close the dialogue with
// status failed and a partial transcript.
Dialogue synthesize(const DialoguePlan* plan, const std::vector<ToolSpec>& tools,
                    const AgentBackends& backends, const AgentConfig& config, std::uint64_t seed,
                    const Clock& clock = {});

// One simulated tool reply; the content is a JSON object conforming to the
// tool's declared results schema and the message answers call.id.
ChatMessage simulate_tool(const ToolCall& call, const ToolSpec& spec, ChatBackend& backend,
                          const AgentConfig& config, std::uint64_t seed);

// Transcript shape check: optional leading system message, then repeated
// user turns each followed by one or more assistant messages whose tool
// calls are answered in order.
bool check_role_grammar(const std::vector<ChatMessage>& messages);

// Chat-completions schema for one tool (parameters only; results stay in the
// tool agent's prompt).
json wire_tool_schema(const ToolSpec& tool);

extern const char* const kUserPromptTemplate;
extern const char* const kUserImproviseTemplate;
extern const char* const kAssistantSystemTemplate;
extern const char* const kToolPromptTemplate;

}  // namespace toolflow
