#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/llm_client.hpp"
#include "toolflow/tool_catalog.hpp"

namespace toolflow {

enum class PlanKind { ToolCall, Chitchat };

const char* to_string(PlanKind kind);
PlanKind plan_kind_from_string(const std::string& name);

struct PlanItem {
    int index = 0;
    std::string intent;
    PlanKind kind = PlanKind::ToolCall;
    std::vector<std::string> target_tools;  // non-empty iff kind == ToolCall
};

struct DialoguePlan {
    std::vector<PlanItem> items;
    std::vector<std::string> subset;  // sampled tool names
    std::string raw;                  // backend text, verbatim, for audit
    std::string model;
    std::uint64_t seed = 0;
    int attempts = 1;

    json to_json() const;
    static DialoguePlan from_json(const json& j);
};

struct PlanViolation {
    int item_index = -1;  // -1 for plan-level rules
    std::string rule;
    std::string detail;
};

// Empty result iff every plan invariant holds: at least one tool_call item,
// intents non-empty, targets inside the subset, every subset tool covered,
// chitchat items target nothing.
std::vector<PlanViolation> validate_plan(const DialoguePlan& plan,
                                         const std::vector<std::string>& subset_names);

struct PlannerConfig {
    int retries = 2;
    int min_items = 3;
    int max_items = 8;
    std::string prompt_template;  // empty selects the built-in template
    GenerationParams params;
    RetryPolicy retry_policy;
};

// Prompts the backend for a JSON array of {intent, kind, tools} items and
// re-asks with the validation error appended until the plan is clean or
// retries run out.
DialoguePlan generate_plan(const std::vector<ToolSpec>& subset, ChatBackend& backend,
                           const PlannerConfig& config = {});

extern const char* const kPlanPromptTemplate;

}  // namespace toolflow
