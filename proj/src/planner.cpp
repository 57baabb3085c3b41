#include "toolflow/planner.hpp"

#include <algorithm>
#include <set>

namespace toolflow {

const char* to_string(PlanKind kind) {
    return kind == PlanKind::ToolCall ? "tool_call" : "chitchat";
}

PlanKind plan_kind_from_string(const std::string& name) {
    if (name == "tool_call") return PlanKind::ToolCall;
    if (name == "chitchat") return PlanKind::Chitchat;
    throw ValidationError("unknown plan item kind: '" + name + "'");
}

json DialoguePlan::to_json() const {
    json item_list = json::array();
    for (const auto& item : items) {
        item_list.push_back(json{{"index", item.index},
                                 {"intent", item.intent},
                                 {"kind", to_string(item.kind)},
                                 {"tools", item.target_tools}});
    }
    return json{{"items", item_list}, {"subset", subset},   {"raw", raw},
                {"model", model},     {"seed", seed},       {"attempts", attempts}};
}

DialoguePlan DialoguePlan::from_json(const json& j) {
    DialoguePlan plan;
    for (const auto& item_json : j.at("items")) {
        PlanItem item;
        item.index = item_json.at("index").get<int>();
        item.intent = item_json.at("intent").get<std::string>();
        item.kind = plan_kind_from_string(item_json.at("kind").get<std::string>());
        item.target_tools = item_json.at("tools").get<std::vector<std::string>>();
        plan.items.push_back(std::move(item));
    }
    plan.subset = j.at("subset").get<std::vector<std::string>>();
    plan.raw = j.value("raw", std::string());
    plan.model = j.value("model", std::string());
    plan.seed = j.value("seed", std::uint64_t{0});
    plan.attempts = j.value("attempts", 1);
    return plan;
}

std::vector<PlanViolation> validate_plan(const DialoguePlan& plan,
                                         const std::vector<std::string>& subset_names) {
    std::vector<PlanViolation> violations;
    const std::set<std::string> subset(subset_names.begin(), subset_names.end());
    std::set<std::string> covered;
    bool any_tool_call = false;

    if (plan.items.empty()) {
        violations.push_back({-1, "non_empty", "plan has no items"});
    }
    for (std::size_t i = 0; i < plan.items.size(); ++i) {
        const PlanItem& item = plan.items[i];
        const int idx = static_cast<int>(i);
        if (item.index != idx) {
            violations.push_back({idx, "contiguous_index",
                                  "item carries index " + std::to_string(item.index)});
        }
        if (item.intent.empty()) {
            violations.push_back({idx, "intent_non_empty", "item has an empty intent"});
        }
        if (item.kind == PlanKind::ToolCall) {
            any_tool_call = true;
            if (item.target_tools.empty()) {
                violations.push_back({idx, "tool_call_targets", "tool_call item targets no tool"});
            }
            for (const auto& name : item.target_tools) {
                if (!subset.count(name)) {
                    violations.push_back(
                        {idx, "target_in_subset", "targets '" + name + "' outside the subset"});
                } else {
                    covered.insert(name);
                }
            }
        } else if (!item.target_tools.empty()) {
            violations.push_back({idx, "chitchat_no_targets", "chitchat item targets tools"});
        }
    }
    if (!plan.items.empty() && !any_tool_call) {
        violations.push_back({-1, "has_tool_call", "plan contains no tool_call item"});
    }
    for (const auto& name : subset_names) {
        if (!covered.count(name)) {
            violations.push_back({-1, "coverage", "subset tool '" + name + "' is never targeted"});
        }
    }
    return violations;
}

const char* const kPlanPromptTemplate =
    "Design a conversation plan between a person and an AI assistant that can call tools.\n"
    "TOOLS: {tools}\n"
    "Write an ordered list of requests the person will make, one coherent conversation.\n"
    "Each request is either a task that needs one or more of the tools above (kind "
    "\"tool_call\") or casual conversation (kind \"chitchat\"). Requests should follow on "
    "from each other naturally, and every tool must be needed by at least one request.\n"
    "Produce between {min_items} and {max_items} items.\n"
    "Respond with a JSON array only; each element is "
    "{\"intent\": \"<one sentence>\", \"kind\": \"tool_call\"|\"chitchat\", "
    "\"tools\": [\"<tool name>\", ...]}.\n";

namespace {

json tools_array(const std::vector<ToolSpec>& subset) {
    json arr = json::array();
    for (const auto& tool : subset) arr.push_back(tool.to_json());
    return arr;
}

// The reply should be a bare JSON array, but judges love prose; fall back to
// the outermost [...] slice.
json parse_item_array(const std::string& content) {
    try {
        return json::parse(content);
    } catch (const json::exception&) {
    }
    const std::size_t open = content.find('[');
    const std::size_t close = content.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ValidationError("reply contains no JSON array");
    }
    return json::parse(content.substr(open, close - open + 1));
}

DialoguePlan parse_plan(const std::string& content, const std::vector<std::string>& subset_names) {
    const json arr = parse_item_array(content);
    if (!arr.is_array()) throw ValidationError("reply is not a JSON array");
    DialoguePlan plan;
    plan.subset = subset_names;
    int index = 0;
    for (const auto& item_json : arr) {
        PlanItem item;
        item.index = index++;
        item.intent = item_json.value("intent", std::string());
        item.kind = plan_kind_from_string(item_json.value("kind", std::string("tool_call")));
        if (item_json.contains("tools")) {
            item.target_tools = item_json.at("tools").get<std::vector<std::string>>();
        }
        plan.items.push_back(std::move(item));
    }
    return plan;
}

std::string violations_text(const std::vector<PlanViolation>& violations) {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        if (v.item_index >= 0) out += "item " + std::to_string(v.item_index) + ": ";
        out += v.rule + " (" + v.detail + ")";
    }
    return out;
}

}  // namespace

DialoguePlan generate_plan(const std::vector<ToolSpec>& subset, ChatBackend& backend,
                           const PlannerConfig& config) {
    if (subset.empty()) throw ValidationError("cannot plan over an empty tool subset");
    std::vector<std::string> subset_names;
    for (const auto& tool : subset) subset_names.push_back(tool.name);

    const std::string tmpl =
        config.prompt_template.empty() ? kPlanPromptTemplate : config.prompt_template;
    const std::string base_prompt =
        render_prompt(tmpl, {{"tools", tools_array(subset).dump()},
                             {"min_items", std::to_string(config.min_items)},
                             {"max_items", std::to_string(config.max_items)}});

    std::string prompt = base_prompt;
    std::string last_error;
    int attempts = 0;
    for (int attempt = 0; attempt <= config.retries; ++attempt) {
        ++attempts;
        const ChatMessage reply = complete_with_retry(
            backend, {ChatMessage{Role::User, prompt}}, config.params, {}, config.retry_policy);
        try {
            DialoguePlan plan = parse_plan(reply.content, subset_names);
            const auto violations = validate_plan(plan, subset_names);
            if (!violations.empty()) {
                throw ValidationError(violations_text(violations));
            }
            const int n_items = static_cast<int>(plan.items.size());
            if (n_items < config.min_items || n_items > config.max_items) {
                throw ValidationError("plan has " + std::to_string(n_items) +
                                      " items, outside [" + std::to_string(config.min_items) +
                                      ", " + std::to_string(config.max_items) + "]");
            }
            plan.raw = reply.content;
            plan.model = reply.model;
            plan.seed = config.params.seed;
            plan.attempts = attempts;
            return plan;
        } catch (const json::exception& e) {
            last_error = e.what();
        } catch (const ValidationError& e) {
            last_error = e.what();
        }
        prompt = base_prompt + "\nYour previous reply was rejected: " + last_error +
                 "\nReply again with a corrected JSON array only.\n";
    }
    throw ValidationError("plan generation failed after " + std::to_string(attempts) +
                          " attempts: " + last_error);
}

}  // namespace toolflow
