#include "toolflow/synthesizer.hpp"

#include <algorithm>

namespace toolflow {

const char* to_string(DialogueStatus status) {
    switch (status) {
        case DialogueStatus::Complete: return "complete";
        case DialogueStatus::TurnLimit: return "turn_limit";
        case DialogueStatus::Failed: return "failed";
    }
    return "failed";
}

DialogueStatus dialogue_status_from_string(const std::string& name) {
    if (name == "complete") return DialogueStatus::Complete;
    if (name == "turn_limit") return DialogueStatus::TurnLimit;
    if (name == "failed") return DialogueStatus::Failed;
    throw Error("unknown dialogue status: '" + name + "'");
}

json Provenance::to_json() const {
    json advance = json::array();
    for (const auto& a : item_advance) {
        advance.push_back(json{{"item_index", a.item_index}, {"finished", a.finished}});
    }
    json j{{"seed", seed},
           {"master_seed", master_seed},
           {"attempt", attempt},
           {"agent_models", agent_models},
           {"sampling", sampling},
           {"plan_present", plan_present},
           {"subset_nodes", subset_nodes},
           {"item_advance", advance},
           {"pipeline_version", pipeline_version},
           {"started_unix", started_unix},
           {"finished_unix", finished_unix}};
    if (!error.empty()) j["error"] = error;
    return j;
}

Provenance Provenance::from_json(const json& j) {
    Provenance p;
    p.seed = j.value("seed", std::uint64_t{0});
    p.master_seed = j.value("master_seed", std::uint64_t{0});
    p.attempt = j.value("attempt", -1LL);
    if (j.contains("agent_models")) {
        p.agent_models = j.at("agent_models").get<std::map<std::string, std::string>>();
    }
    p.sampling = j.value("sampling", std::string());
    p.plan_present = j.value("plan_present", false);
    if (j.contains("subset_nodes")) p.subset_nodes = j.at("subset_nodes").get<std::vector<int>>();
    if (j.contains("item_advance")) {
        for (const auto& a : j.at("item_advance")) {
            p.item_advance.push_back({a.at("item_index").get<int>(), a.at("finished").get<bool>()});
        }
    }
    p.pipeline_version = j.value("pipeline_version", std::string());
    p.started_unix = j.value("started_unix", std::int64_t{0});
    p.finished_unix = j.value("finished_unix", std::int64_t{0});
    p.error = j.value("error", std::string());
    return p;
}

json Dialogue::to_json() const {
    json tool_records = json::array();
    for (const auto& tool : tools) tool_records.push_back(tool.to_json());
    json message_list = json::array();
    for (const auto& msg : messages) message_list.push_back(msg.to_json());
    return json{{"id", id},
                {"tools", tool_records},
                {"plan", plan ? plan->to_json() : json(nullptr)},
                {"messages", message_list},
                {"status", to_string(status)},
                {"provenance", provenance.to_json()}};
}

Dialogue Dialogue::from_json(const json& j) {
    Dialogue d;
    d.id = j.at("id").get<std::string>();
    for (const auto& record : j.at("tools")) d.tools.push_back(ToolSpec::from_json(record));
    if (j.contains("plan") && !j.at("plan").is_null()) {
        d.plan = DialoguePlan::from_json(j.at("plan"));
    }
    for (const auto& msg : j.at("messages")) d.messages.push_back(ChatMessage::from_json(msg));
    d.status = dialogue_status_from_string(j.at("status").get<std::string>());
    if (j.contains("provenance")) d.provenance = Provenance::from_json(j.at("provenance"));
    return d;
}

json wire_tool_schema(const ToolSpec& tool) {
    json record = tool.to_json();
    record["function"].erase("results");
    return record;
}

const char* const kUserPromptTemplate =
    "You are role-playing the person talking to an AI assistant that can call tools.\n"
    "TOOLS: {tools}\n"
    "PLAN: {plan}\n"
    "STATE: {state}\n"
    "TRANSCRIPT:\n"
    "{transcript}\n"
    "Check whether the current request in the plan has been completed; if it has, move on to "
    "the next one.\n"
    "Reply with a first line holding exactly {\"item_index\": <current item>, \"finished\": "
    "<whether it is complete>} and your next message to the assistant on the remaining lines. "
    "When every request in the plan is complete, reply with the marker line alone.\n";

const char* const kUserImproviseTemplate =
    "You are role-playing the person talking to an AI assistant that can call tools.\n"
    "TOOLS: {tools}\n"
    "STATE: {state}\n"
    "TRANSCRIPT:\n"
    "{transcript}\n"
    "Invent your own requests, one at a time, that exercise these tools; a little small talk "
    "is fine too. Stop when you have nothing left to ask.\n"
    "Reply with a first line holding exactly {\"item_index\": <requests made so far>, "
    "\"finished\": <true when you are done>} and your next message to the assistant on the "
    "remaining lines. When you are done, reply with the marker line alone.\n";

const char* const kAssistantSystemTemplate =
    "You are a helpful AI assistant with access to the provided function tools. Answer the "
    "person's requests. When a request needs a tool and all required parameters are present, "
    "emit the tool call; when required parameters are missing, ask for them instead of "
    "guessing. When no tool is needed, reply directly in plain text.\n";

const char* const kToolPromptTemplate =
    "You simulate the execution of a function tool.\n"
    "TOOL: {tool}\n"
    "CALL: {call}\n"
    "Respond with a single JSON object holding plausible values for the tool's declared "
    "result fields, and nothing else.\n";

namespace {

std::string render_transcript(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& msg : messages) {
        switch (msg.role) {
            case Role::System:
                break;
            case Role::User:
                out += "user: " + msg.content + "\n";
                break;
            case Role::Assistant:
                if (!msg.content.empty()) out += "assistant: " + msg.content + "\n";
                for (const auto& call : msg.tool_calls) {
                    out += "assistant called " + call.name + " with " + call.arguments + "\n";
                }
                break;
            case Role::Tool:
                out += "tool " + msg.tool_call_id + ": " + msg.content + "\n";
                break;
        }
    }
    return out;
}

// Transcript lines for tool replies should carry the tool's name, not the
// call id; resolve ids before rendering.
std::vector<ChatMessage> with_named_tool_lines(const std::vector<ChatMessage>& messages) {
    std::map<std::string, std::string> call_names;
    std::vector<ChatMessage> out = messages;
    for (auto& msg : out) {
        if (msg.role == Role::Assistant) {
            for (const auto& call : msg.tool_calls) call_names[call.id] = call.name;
        } else if (msg.role == Role::Tool) {
            auto it = call_names.find(msg.tool_call_id);
            msg.tool_call_id = it == call_names.end() ? "unknown" : it->second;
        }
    }
    return out;
}

struct UserReply {
    ItemAdvance marker;
    std::string utterance;
    std::string model;
};

UserReply parse_user_reply(const ChatMessage& reply) {
    const std::string& content = reply.content;
    const std::size_t newline = content.find('\n');
    const std::string head = newline == std::string::npos ? content : content.substr(0, newline);
    json marker;
    try {
        marker = json::parse(head);
    } catch (const json::exception&) {
        throw ValidationError("user agent reply lacks a marker line: '" + head.substr(0, 120) +
                              "'");
    }
    if (!marker.is_object() || !marker.contains("item_index") || !marker.contains("finished")) {
        throw ValidationError("user agent marker is missing item_index/finished");
    }
    UserReply out;
    out.marker.item_index = marker.at("item_index").get<int>();
    out.marker.finished = marker.at("finished").get<bool>();
    if (newline != std::string::npos) {
        std::string rest = content.substr(newline + 1);
        while (!rest.empty() && (rest.back() == '\n' || rest.back() == ' ')) rest.pop_back();
        out.utterance = rest;
    }
    out.model = reply.model;
    return out;
}

}  // namespace

ChatMessage simulate_tool(const ToolCall& call, const ToolSpec& spec, ChatBackend& backend,
                          const AgentConfig& config, std::uint64_t seed) {
    if (call.name != spec.name) {
        throw ValidationError("tool call '" + call.name + "' simulated against spec '" +
                              spec.name + "'");
    }
    const std::string tmpl =
        config.tool_prompt_template.empty() ? kToolPromptTemplate : config.tool_prompt_template;
    const json call_json{{"name", call.name}, {"arguments", json::parse(call.arguments)}};
    const std::string prompt =
        render_prompt(tmpl, {{"tool", spec.canonical_text()}, {"call", call_json.dump()}});
    GenerationParams params = config.tool_params;
    params.seed = seed;

    std::string last_error;
    for (int attempt = 0; attempt <= config.retries; ++attempt) {
        const ChatMessage reply = complete_with_retry(backend, {ChatMessage{Role::User, prompt}},
                                                      params, {}, config.retry_policy);
        try {
            const json result = json::parse(reply.content);
            if (!result.is_object()) throw ValidationError("result is not a JSON object");
            for (const auto& [key, value] : result.items()) {
                const ReturnSpec* ret = spec.find_return(key);
                if (!ret) {
                    throw ValidationError("result key '" + key +
                                          "' is not among the declared return values");
                }
                if (!value_matches_type(value, ret->type)) {
                    throw ValidationError("result key '" + key + "' does not match type " +
                                          to_string(ret->type));
                }
            }
            ChatMessage msg;
            msg.role = Role::Tool;
            msg.content = result.dump();
            msg.tool_call_id = call.id;
            msg.model = reply.model;
            return msg;
        } catch (const json::exception& e) {
            last_error = e.what();
        } catch (const ValidationError& e) {
            last_error = e.what();
        }
    }
    throw ValidationError("tool simulation for '" + spec.name + "' failed schema check after " +
                          std::to_string(config.retries + 1) + " attempts: " + last_error);
}

Dialogue synthesize(const DialoguePlan* plan, const std::vector<ToolSpec>& tools,
                    const AgentBackends& backends, const AgentConfig& config, std::uint64_t seed,
                    const Clock& clock) {
    if (!backends.user || !backends.assistant || !backends.tool) {
        throw Error("synthesize: all three agent backends are required");
    }
    if (plan && config.turn_limit < static_cast<int>(plan->items.size())) {
        throw ValidationError("turn_limit " + std::to_string(config.turn_limit) +
                              " is below the plan length " + std::to_string(plan->items.size()));
    }
    const Clock now = clock ? clock : Clock(&unix_now);

    Dialogue dialogue;
    dialogue.tools = tools;
    if (plan) dialogue.plan = *plan;
    dialogue.provenance.seed = seed;
    dialogue.provenance.plan_present = plan != nullptr;
    dialogue.provenance.started_unix = now();

    json tool_records = json::array();
    std::vector<json> schemas;
    for (const auto& tool : tools) {
        tool_records.push_back(tool.to_json());
        schemas.push_back(wire_tool_schema(tool));
    }
    const std::string tools_text = tool_records.dump();
    const std::string plan_text = plan ? plan->to_json().dump() : "";

    GenerationParams user_params = config.user_params;
    user_params.seed = derive_seed(seed, 1);
    GenerationParams assistant_params = config.assistant_params;
    assistant_params.seed = derive_seed(seed, 2);

    dialogue.provenance.agent_models = {
        {"user", user_params.model.empty() ? backends.user->id() : user_params.model},
        {"assistant",
         assistant_params.model.empty() ? backends.assistant->id() : assistant_params.model},
        {"tool", config.tool_params.model.empty() ? backends.tool->id() : config.tool_params.model}};

    const std::string user_template =
        plan ? (config.user_prompt_template.empty() ? kUserPromptTemplate
                                                    : config.user_prompt_template)
             : (config.user_improvise_template.empty() ? kUserImproviseTemplate
                                                       : config.user_improvise_template);
    const std::string assistant_system = config.assistant_system_template.empty()
                                             ? kAssistantSystemTemplate
                                             : config.assistant_system_template;

    int current_item = 0;
    int item_exchanges = 0;
    int requests_made = 0;
    int assistant_turns = 0;
    std::uint64_t tool_seed_index = 0;

    try {
        for (;;) {
            // --- user step -------------------------------------------------
            json state;
            if (plan) {
                state = json{{"current_item", current_item},
                             {"item_exchanges", item_exchanges},
                             {"items_total", plan->items.size()}};
            } else {
                state = json{{"requests_made", requests_made}};
            }
            const std::string user_prompt =
                render_prompt(user_template, {{"tools", tools_text},
                                              {"plan", plan_text},
                                              {"state", state.dump()},
                                              {"transcript", render_transcript(with_named_tool_lines(
                                                                 dialogue.messages))}});

            UserReply user_reply;
            {
                std::string last_error;
                bool parsed = false;
                for (int attempt = 0; attempt <= config.retries && !parsed; ++attempt) {
                    const ChatMessage raw = complete_with_retry(
                        *backends.user, {ChatMessage{Role::User, user_prompt}}, user_params, {},
                        config.retry_policy);
                    try {
                        user_reply = parse_user_reply(raw);
                        if (plan && user_reply.marker.item_index != current_item) {
                            throw ValidationError(
                                "user agent marker addresses item " +
                                std::to_string(user_reply.marker.item_index) + ", expected " +
                                std::to_string(current_item));
                        }
                        parsed = true;
                    } catch (const ValidationError& e) {
                        last_error = e.what();
                    }
                }
                if (!parsed) {
                    throw ValidationError("user agent output stayed malformed: " + last_error);
                }
            }
            dialogue.provenance.item_advance.push_back(user_reply.marker);

            if (plan) {
                if (user_reply.marker.finished) {
                    if (current_item + 1 >= static_cast<int>(plan->items.size())) {
                        dialogue.status = DialogueStatus::Complete;
                        break;
                    }
                    ++current_item;
                    item_exchanges = 0;
                }
            } else if (user_reply.marker.finished) {
                dialogue.status = DialogueStatus::Complete;
                break;
            }
            if (user_reply.utterance.empty()) {
                throw ValidationError("user agent emitted no utterance for an unfinished plan");
            }
            ChatMessage user_msg;
            user_msg.role = Role::User;
            user_msg.content = user_reply.utterance;
            user_msg.model = user_reply.model;
            dialogue.messages.push_back(std::move(user_msg));
            ++requests_made;

            // --- assistant (and tool) steps ---------------------------------
            bool hit_turn_limit = false;
            for (;;) {
                std::vector<ChatMessage> assistant_view;
                assistant_view.push_back(ChatMessage{Role::System, assistant_system});
                for (const auto& m : dialogue.messages) assistant_view.push_back(m);

                ChatMessage assistant_msg;
                {
                    std::string last_error;
                    bool accepted = false;
                    for (int attempt = 0; attempt <= config.retries && !accepted; ++attempt) {
                        assistant_msg = complete_with_retry(*backends.assistant, assistant_view,
                                                            assistant_params, schemas,
                                                            config.retry_policy);
                        try {
                            if (assistant_msg.content.empty() && assistant_msg.tool_calls.empty()) {
                                throw ValidationError("assistant emitted an empty message");
                            }
                            for (const auto& call : assistant_msg.tool_calls) {
                                const ToolSpec* spec = nullptr;
                                for (const auto& t : tools) {
                                    if (t.name == call.name) spec = &t;
                                }
                                if (!spec) {
                                    throw ValidationError("assistant called unknown tool '" +
                                                          call.name + "'");
                                }
                                const json args = json::parse(call.arguments);
                                for (const auto& [key, value] : args.items()) {
                                    (void)value;
                                    if (!spec->find_parameter(key)) {
                                        throw ValidationError("argument '" + key +
                                                              "' is not declared by tool '" +
                                                              call.name + "'");
                                    }
                                }
                            }
                            accepted = true;
                        } catch (const ValidationError& e) {
                            last_error = e.what();
                        } catch (const json::exception& e) {
                            last_error = e.what();
                        }
                    }
                    if (!accepted) {
                        throw ValidationError("assistant output stayed malformed: " + last_error);
                    }
                }
                assistant_msg.role = Role::Assistant;
                dialogue.messages.push_back(assistant_msg);
                ++assistant_turns;

                if (!assistant_msg.tool_calls.empty()) {
                    for (const auto& call : assistant_msg.tool_calls) {
                        const ToolSpec* spec = nullptr;
                        for (const auto& t : tools) {
                            if (t.name == call.name) spec = &t;
                        }
                        dialogue.messages.push_back(
                            simulate_tool(call, *spec, *backends.tool, config,
                                          derive_seed(seed, 1000 + tool_seed_index++)));
                    }
                    if (assistant_turns >= config.turn_limit) {
                        hit_turn_limit = true;
                        break;
                    }
                    continue;  // assistant reads the results next
                }
                ++item_exchanges;
                if (assistant_turns >= config.turn_limit) hit_turn_limit = true;
                break;
            }
            if (hit_turn_limit) {
                dialogue.status = DialogueStatus::TurnLimit;
                break;
            }
        }
    } catch (const BackendError& e) {
        dialogue.status = DialogueStatus::Failed;
        dialogue.provenance.error = e.what();
    } catch (const ValidationError& e) {
        dialogue.status = DialogueStatus::Failed;
        dialogue.provenance.error = e.what();
    }

    dialogue.provenance.finished_unix = now();
    return dialogue;
}

bool check_role_grammar(const std::vector<ChatMessage>& messages) {
    std::size_t i = 0;
    if (i < messages.size() && messages[i].role == Role::System) ++i;
    if (i >= messages.size()) return false;
    while (i < messages.size()) {
        if (messages[i].role != Role::User) return false;
        if (!messages[i].tool_calls.empty() || !messages[i].tool_call_id.empty()) return false;
        ++i;
        int groups = 0;
        while (i < messages.size() && messages[i].role == Role::Assistant) {
            const auto& calls = messages[i].tool_calls;
            if (!messages[i].tool_call_id.empty()) return false;
            ++i;
            for (const auto& call : calls) {
                if (i >= messages.size() || messages[i].role != Role::Tool ||
                    messages[i].tool_call_id != call.id) {
                    return false;
                }
                ++i;
            }
            ++groups;
        }
        if (groups == 0) return false;
        if (i < messages.size() && messages[i].role == Role::Tool) return false;
    }
    return true;
}

}  // namespace toolflow
