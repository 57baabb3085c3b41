#include "toolflow/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <thread>

#include "httplib.h"

#include "toolflow/tokenize.hpp"

namespace toolflow {

const char* to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

Role role_from_string(const std::string& name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    if (name == "tool") return Role::Tool;
    throw Error("unknown role: '" + name + "'");
}

json ToolCall::to_json() const {
    return json{{"id", id}, {"name", name}, {"arguments", arguments}};
}

ToolCall ToolCall::from_json(const json& j) {
    ToolCall call;
    call.id = j.at("id").get<std::string>();
    call.name = j.at("name").get<std::string>();
    call.arguments = j.at("arguments").get<std::string>();
    return call;
}

json ChatMessage::to_json() const {
    json j{{"role", to_string(role)}, {"content", content}};
    if (!tool_calls.empty()) {
        json calls = json::array();
        for (const auto& call : tool_calls) calls.push_back(call.to_json());
        j["tool_calls"] = calls;
    }
    if (!tool_call_id.empty()) j["tool_call_id"] = tool_call_id;
    if (!model.empty()) j["model"] = model;
    return j;
}

ChatMessage ChatMessage::from_json(const json& j) {
    ChatMessage msg;
    msg.role = role_from_string(j.at("role").get<std::string>());
    msg.content = j.value("content", std::string());
    if (j.contains("tool_calls")) {
        for (const auto& call : j.at("tool_calls")) {
            msg.tool_calls.push_back(ToolCall::from_json(call));
        }
    }
    msg.tool_call_id = j.value("tool_call_id", std::string());
    msg.model = j.value("model", std::string());
    return msg;
}

json ChatMessage::to_wire_json() const {
    json j{{"role", to_string(role)}, {"content", content}};
    if (!tool_calls.empty()) {
        json calls = json::array();
        for (const auto& call : tool_calls) {
            calls.push_back(json{{"id", call.id},
                                 {"type", "function"},
                                 {"function", {{"name", call.name}, {"arguments", call.arguments}}}});
        }
        j["tool_calls"] = calls;
    }
    if (!tool_call_id.empty()) j["tool_call_id"] = tool_call_id;
    return j;
}

ChatMessage ChatMessage::from_wire_json(const json& j) {
    ChatMessage msg;
    msg.role = role_from_string(j.value("role", "assistant"));
    if (j.contains("content") && j.at("content").is_string()) {
        msg.content = j.at("content").get<std::string>();
    }
    if (j.contains("tool_calls")) {
        for (const auto& call : j.at("tool_calls")) {
            ToolCall tc;
            tc.id = call.value("id", std::string());
            const json& fn = call.at("function");
            tc.name = fn.at("name").get<std::string>();
            tc.arguments = fn.value("arguments", std::string("{}"));
            msg.tool_calls.push_back(std::move(tc));
        }
    }
    msg.tool_call_id = j.value("tool_call_id", std::string());
    return msg;
}

namespace {

std::string schema_tool_name(const json& schema) {
    if (schema.contains("function") && schema.at("function").contains("name")) {
        return schema.at("function").at("name").get<std::string>();
    }
    return schema.value("name", std::string());
}

void validate_reply(const ChatMessage& reply, const std::vector<json>& tool_schemas) {
    if (reply.tool_calls.empty()) return;
    std::vector<std::string> names;
    names.reserve(tool_schemas.size());
    for (const auto& schema : tool_schemas) names.push_back(schema_tool_name(schema));
    for (const auto& call : reply.tool_calls) {
        if (!tool_schemas.empty() &&
            std::find(names.begin(), names.end(), call.name) == names.end()) {
            throw BackendError("hallucinated tool: '" + call.name + "' not in the supplied schemas");
        }
        json args;
        try {
            args = json::parse(call.arguments);
        } catch (const json::exception&) {
            throw BackendError("tool call '" + call.name + "': arguments are not valid JSON");
        }
        if (!args.is_object()) {
            throw BackendError("tool call '" + call.name + "': arguments are not a JSON object");
        }
    }
}

}  // namespace

ChatMessage complete_with_retry(ChatBackend& backend, const std::vector<ChatMessage>& messages,
                                const GenerationParams& params,
                                const std::vector<json>& tool_schemas, const RetryPolicy& retry,
                                int* attempts_out) {
    if (messages.empty()) throw BackendError("complete called with no messages");
    int attempts = 0;
    double backoff = retry.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        ++attempts;
        try {
            ChatMessage reply = backend.complete(messages, params, tool_schemas);
            validate_reply(reply, tool_schemas);
            if (reply.model.empty()) {
                reply.model = params.model.empty() ? backend.id() : params.model;
            }
            if (attempts_out) *attempts_out = attempts;
            return reply;
        } catch (const TransientBackendError& e) {
            last_error = e.what();
            if (attempt == retry.max_retries) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int>(backoff)));
            backoff *= retry.multiplier;
        }
    }
    if (attempts_out) *attempts_out = attempts;
    throw BackendError("backend '" + backend.id() + "' failed after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

std::string pick_model(const std::vector<std::string>& pool, std::uint64_t seed) {
    if (pool.empty()) throw BackendError("empty model pool");
    std::mt19937_64 rng(seed);
    return pool[uniform_index(rng, pool.size())];
}

bool tool_call_ids_correlate(const std::vector<ChatMessage>& messages) {
    std::map<std::string, int> open_calls;  // id -> answers seen
    for (const auto& msg : messages) {
        if (msg.role == Role::Assistant) {
            for (const auto& call : msg.tool_calls) {
                if (call.id.empty() || open_calls.count(call.id)) return false;
                open_calls[call.id] = 0;
            }
        } else if (msg.role == Role::Tool) {
            auto it = open_calls.find(msg.tool_call_id);
            if (it == open_calls.end() || it->second > 0) return false;
            it->second = 1;
        } else if (!msg.tool_calls.empty() || !msg.tool_call_id.empty()) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, std::string id) : id_(std::move(id)) {
    slots_.reserve(entries.size());
    for (auto& entry : entries) slots_.push_back(Slot{std::move(entry), 0});
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    std::vector<ScriptEntry> entries;
    for (const auto& item : doc.at("entries")) {
        ScriptEntry entry;
        entry.role_pattern = item.value("role", std::string());
        entry.content_pattern = item.value("content", std::string());
        entry.max_uses = item.value("max_uses", 0);
        entry.response = ChatMessage::from_json(item.at("response"));
        if (entry.response.role == Role::User) entry.response.role = Role::Assistant;
        entries.push_back(std::move(entry));
    }
    return ScriptedBackend(std::move(entries), doc.value("id", std::string("scripted-mock")));
}

ChatMessage ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params,
                                      const std::vector<json>& tool_schemas) {
    (void)params;
    (void)tool_schemas;
    if (messages.empty()) throw BackendError("scripted backend: empty message list");
    const ChatMessage& last = messages.back();
    const std::string role_name = to_string(last.role);

    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    for (auto& slot : slots_) {
        if (slot.entry.max_uses > 0 && slot.uses >= slot.entry.max_uses) continue;
        if (!slot.entry.role_pattern.empty() &&
            !std::regex_search(role_name, std::regex(slot.entry.role_pattern))) {
            continue;
        }
        if (!slot.entry.content_pattern.empty() &&
            !std::regex_search(last.content, std::regex(slot.entry.content_pattern))) {
            continue;
        }
        ++slot.uses;
        ChatMessage reply = slot.entry.response;
        if (reply.model.empty()) reply.model = id_;
        return reply;
    }
    const std::string preview = last.content.substr(0, 160);
    throw BackendError("scripted backend: no script entry matches message (role=" + role_name +
                       ", content starts with: '" + preview + "')");
}

std::string ScriptedBackend::id() const {
    return id_;
}

int ScriptedBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

// ---------------------------------------------------------------------------
// StructuredMockBackend

namespace {

std::optional<std::string> marker_line(const std::string& content, const std::string& marker) {
    std::size_t pos = 0;
    while (pos <= content.size()) {
        if (content.compare(pos, marker.size(), marker) == 0) {
            const std::size_t start = pos + marker.size();
            const std::size_t end = content.find('\n', start);
            return content.substr(start, end == std::string::npos ? std::string::npos : end - start);
        }
        pos = content.find('\n', pos);
        if (pos == std::string::npos) break;
        ++pos;
    }
    return std::nullopt;
}

std::optional<std::string> section_after(const std::string& content, const std::string& marker) {
    const std::size_t pos = content.find(marker);
    if (pos == std::string::npos) return std::nullopt;
    return content.substr(pos + marker.size());
}

bool mentions_word(const std::string& haystack, const std::string& word) {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };
    const std::string text = lower(haystack);
    const std::string needle = lower(word);
    if (needle.empty()) return false;
    std::size_t pos = 0;
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
    };
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t after = pos + needle.size();
        const bool right_ok = after >= text.size() || !is_word_char(text[after]);
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

std::string first_words(const std::string& text, std::size_t count) {
    std::string out;
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (space) {
            if (in_word) {
                ++words;
                if (words == count) break;
            }
            in_word = false;
        } else {
            in_word = true;
        }
        out.push_back(space ? ' ' : c);
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '.')) out.pop_back();
    return out;
}

json dummy_value(const std::string& type, const std::string& field_name) {
    if (type == "number") return 3.25;
    if (type == "integer") return 7;
    if (type == "boolean") return true;
    if (type == "array") return json::array({"simulated " + field_name});
    if (type == "object") return json{{"note", "simulated " + field_name}};
    return "simulated " + field_name;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += (i + 1 == names.size()) ? " and " : ", ";
        out += names[i];
    }
    return out;
}

// Last "tool <name>:" line in a rendered transcript; the topic thread the
// mock user refers back to.
std::string last_tool_topic(const std::string& transcript) {
    std::string topic;
    std::size_t pos = 0;
    while (pos <= transcript.size()) {
        if (transcript.compare(pos, 5, "tool ") == 0) {
            const std::size_t start = pos + 5;
            const std::size_t colon = transcript.find(':', start);
            if (colon != std::string::npos) {
                topic = transcript.substr(start, colon - start);
            }
        }
        pos = transcript.find('\n', pos);
        if (pos == std::string::npos) break;
        ++pos;
    }
    return topic;
}

ChatMessage mock_plan_reply(const std::string& tools_line) {
    const json records = json::parse(tools_line);
    std::vector<std::string> names;
    std::vector<std::string> blurbs;
    for (const auto& record : records) {
        names.push_back(record.at("function").at("name").get<std::string>());
        blurbs.push_back(record.at("function").value("description", std::string()));
    }
    json items = json::array();
    auto tool_item = [&](std::size_t idx) {
        const std::string blurb =
            blurbs[idx].empty() ? ("try out " + names[idx]) : first_words(blurbs[idx], 8);
        items.push_back(json{{"intent", blurb + " using " + names[idx] + "."},
                             {"kind", "tool_call"},
                             {"tools", json::array({names[idx]})}});
    };
    tool_item(0);
    items.push_back(json{{"intent", "Let's take a quick break and chat about the weekend."},
                         {"kind", "chitchat"},
                         {"tools", json::array()}});
    for (std::size_t i = 1; i < names.size() && items.size() < 8; ++i) tool_item(i);
    while (items.size() < 3) {
        items.push_back(json{{"intent", "Share a light remark about how the day is going."},
                             {"kind", "chitchat"},
                             {"tools", json::array()}});
    }
    ChatMessage reply;
    reply.role = Role::Assistant;
    reply.content = items.dump();
    return reply;
}

ChatMessage mock_user_reply(const std::string& content, std::uint64_t seed) {
    const auto state_line = marker_line(content, "STATE: ");
    const json state = state_line ? json::parse(*state_line) : json::object();
    const std::string transcript = section_after(content, "TRANSCRIPT:\n").value_or("");
    const std::string topic = last_tool_topic(transcript);

    ChatMessage reply;
    reply.role = Role::Assistant;

    const auto plan_line = marker_line(content, "PLAN: ");
    if (plan_line) {
        const json plan = json::parse(*plan_line);
        const json& items = plan.at("items");
        const int current = state.value("current_item", 0);
        const int exchanges = state.value("item_exchanges", 0);
        const int total = static_cast<int>(items.size());
        const bool finished = exchanges >= 1;
        const int next = finished ? current + 1 : current;
        json marker{{"item_index", current}, {"finished", finished}};
        if (next >= total) {
            reply.content = marker.dump();
            return reply;
        }
        const json& item = items.at(static_cast<std::size_t>(next));
        std::string utterance;
        if (next > 0) {
            utterance += topic.empty() ? "Picking up from our chat, here is the next thing. "
                                       : "Following up on the " + topic + " result, ";
        }
        utterance += item.at("intent").get<std::string>();
        if (item.at("kind") == "tool_call") {
            std::vector<std::string> tool_names;
            for (const auto& t : item.at("tools")) tool_names.push_back(t.get<std::string>());
            utterance += " Please use " + join_names(tool_names) + " for this.";
        }
        reply.content = marker.dump() + "\n" + utterance;
        return reply;
    }

    // Improvised mode: no plan, burn through a seed-determined request count.
    const auto tools_line = marker_line(content, "TOOLS: ");
    const json records = tools_line ? json::parse(*tools_line) : json::array();
    std::vector<std::string> names;
    for (const auto& record : records) {
        names.push_back(record.at("function").at("name").get<std::string>());
    }
    const int made = state.value("requests_made", 0);
    const int target = 3 + static_cast<int>(seed % 3);
    json marker{{"item_index", made}, {"finished", made >= target}};
    if (made >= target || names.empty()) {
        reply.content = marker.dump();
        return reply;
    }
    const std::string& tool = names[static_cast<std::size_t>(made) % names.size()];
    static const char* kTemplates[] = {
        "Time for something new: run {tool}.",
        "Switch gears entirely; invoke {tool}.",
        "Different task now. Fire off {tool}.",
        "Unrelated: trigger {tool} right away.",
    };
    const std::string tmpl = kTemplates[(seed + static_cast<std::uint64_t>(made)) % 4];
    reply.content = marker.dump() + "\n" + render_prompt(tmpl, {{"tool", tool}});
    return reply;
}

ChatMessage mock_assistant_reply(const std::vector<ChatMessage>& messages,
                                 const std::vector<json>& tool_schemas) {
    ChatMessage reply;
    reply.role = Role::Assistant;
    const ChatMessage& last = messages.back();

    if (last.role == Role::Tool) {
        // Summarize everything returned since the last call batch.
        std::vector<std::string> names;
        std::vector<std::string> payloads;
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role == Role::Tool) {
                payloads.push_back(it->content);
            } else if (it->role == Role::Assistant && !it->tool_calls.empty()) {
                for (const auto& call : it->tool_calls) names.push_back(call.name);
                break;
            } else {
                break;
            }
        }
        std::reverse(payloads.begin(), payloads.end());
        std::string joined;
        for (const auto& p : payloads) {
            if (!joined.empty()) joined += " ";
            joined += p;
        }
        reply.content = "Here is the " + join_names(names) + " result: " + joined +
                        " Anything else on your list?";
        return reply;
    }

    // Answering a user message: call every tool it names, else chat back.
    std::vector<const json*> matched;
    for (const auto& schema : tool_schemas) {
        const std::string name = schema_tool_name(schema);
        if (mentions_word(last.content, name)) matched.push_back(&schema);
    }
    if (matched.empty()) {
        const std::string tail = first_words(last.content, 6);
        reply.content = "That sounds good. Let's keep talking; you mentioned \"" + tail + "\".";
        return reply;
    }
    int call_index = 0;
    for (const json* schema : matched) {
        const json& fn = schema->at("function");
        json args = json::object();
        if (fn.contains("parameters") && fn.at("parameters").contains("properties")) {
            const json& props = fn.at("parameters").at("properties");
            std::vector<std::string> required;
            if (fn.at("parameters").contains("required")) {
                for (const auto& r : fn.at("parameters").at("required")) {
                    required.push_back(r.get<std::string>());
                }
            }
            for (const auto& rname : required) {
                if (props.contains(rname)) {
                    args[rname] = dummy_value(props.at(rname).value("type", "string"), rname);
                }
            }
        }
        ToolCall call;
        call.id = "call-" + std::to_string(messages.size()) + "-" + std::to_string(call_index++);
        call.name = fn.at("name").get<std::string>();
        call.arguments = args.dump();
        reply.tool_calls.push_back(std::move(call));
    }
    return reply;
}

ChatMessage mock_tool_reply(const std::string& content) {
    const auto tool_line = marker_line(content, "TOOL: ");
    if (!tool_line) throw BackendError("structured mock: tool prompt without TOOL line");
    const json record = json::parse(*tool_line);
    json result = json::object();
    const json& fn = record.at("function");
    if (fn.contains("results") && fn.at("results").contains("properties")) {
        for (const auto& [rname, prop] : fn.at("results").at("properties").items()) {
            result[rname] = dummy_value(prop.value("type", "string"), rname);
        }
    }
    ChatMessage reply;
    reply.role = Role::Assistant;
    reply.content = result.dump();
    return reply;
}

ChatMessage mock_enrich_reply(const std::string& content) {
    const auto tool_line = marker_line(content, "TOOL: ");
    const auto field_line = marker_line(content, "FIELD: ");
    std::string tool_name = "the tool";
    if (tool_line) {
        const json record = json::parse(*tool_line);
        tool_name = record.at("function").at("name").get<std::string>();
    }
    ChatMessage reply;
    reply.role = Role::Assistant;
    reply.content =
        json{{"description", "Auto-documented " + field_line.value_or("field") + " of " +
                                  tool_name + "."}}
            .dump();
    return reply;
}

ChatMessage mock_judge_reply(const std::string& content) {
    // Stable scores with a content-derived wiggle so corpora are not all equal.
    const std::uint64_t h = fnv1a64(content);
    const int nat = 3 + static_cast<int>(h % 3);
    const int coh = 3 + static_cast<int>((h >> 8) % 3);
    ChatMessage reply;
    reply.role = Role::Assistant;
    reply.content = "The dialogue reads smoothly and stays on task.\nNAT=" + std::to_string(nat) +
                    " COH=" + std::to_string(coh) + " HELP=4 ACC=5";
    return reply;
}

}  // namespace

StructuredMockBackend::StructuredMockBackend(std::string id) : id_(std::move(id)) {}

ChatMessage StructuredMockBackend::complete(const std::vector<ChatMessage>& messages,
                                            const GenerationParams& params,
                                            const std::vector<json>& tool_schemas) {
    if (messages.empty()) throw BackendError("structured mock: empty message list");
    const std::string& content = messages.back().content;
    ChatMessage reply;
    if (content.find("\nCALL: ") != std::string::npos && marker_line(content, "TOOL: ")) {
        reply = mock_tool_reply(content);
    } else if (marker_line(content, "FIELD: ") && marker_line(content, "TOOL: ")) {
        reply = mock_enrich_reply(content);
    } else if (content.find("TRANSCRIPT:") != std::string::npos) {
        reply = mock_user_reply(content, params.seed);
    } else if (content.find("JSON array") != std::string::npos && marker_line(content, "TOOLS: ")) {
        reply = mock_plan_reply(*marker_line(content, "TOOLS: "));
    } else if (content.find("NAT=") != std::string::npos &&
               content.find("DIALOGUE:") != std::string::npos) {
        reply = mock_judge_reply(content);
    } else if (!tool_schemas.empty() || messages.back().role == Role::Tool) {
        reply = mock_assistant_reply(messages, tool_schemas);
    } else {
        reply.role = Role::Assistant;
        reply.content = "Acknowledged.";
    }
    reply.model = params.model.empty() ? id_ : params.model;
    return reply;
}

std::string StructuredMockBackend::id() const {
    return id_;
}

// ---------------------------------------------------------------------------
// Remote backend

RateLimiter::RateLimiter(int requests_per_minute) {
    if (requests_per_minute > 0) min_interval_s_ = 60.0 / requests_per_minute;
    next_allowed_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
    if (min_interval_s_ <= 0.0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    auto slot = next_allowed_;
    if (slot < now) slot = now;
    next_allowed_ = slot + std::chrono::microseconds(static_cast<long>(min_interval_s_ * 1e6));
    lock.unlock();
    std::this_thread::sleep_until(slot);
}

HttpUrlParts parse_http_url(const std::string& url) {
    HttpUrlParts parts;
    std::string rest = url;
    const std::string http = "http://";
    const std::string https = "https://";
    if (rest.rfind(https, 0) == 0) {
        throw BackendError("https endpoints are not supported; front with an http proxy");
    }
    if (rest.rfind(http, 0) == 0) rest = rest.substr(http.size());
    const std::size_t slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    parts.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const std::size_t colon = hostport.find(':');
    if (colon != std::string::npos) {
        parts.host = hostport.substr(0, colon);
        parts.port = std::stoi(hostport.substr(colon + 1));
    } else {
        parts.host = hostport;
        parts.port = 80;
    }
    if (parts.host.empty()) throw BackendError("bad endpoint URL: '" + url + "'");
    return parts;
}

RemoteChatBackend::RemoteChatBackend(std::string endpoint_url, std::string api_key,
                                     std::string default_model, int requests_per_minute,
                                     int timeout_s)
    : url_(std::move(endpoint_url)),
      api_key_(std::move(api_key)),
      default_model_(std::move(default_model)),
      timeout_s_(timeout_s),
      limiter_(requests_per_minute) {}

ChatMessage RemoteChatBackend::complete(const std::vector<ChatMessage>& messages,
                                        const GenerationParams& params,
                                        const std::vector<json>& tool_schemas) {
    const HttpUrlParts parts = parse_http_url(url_);
    json body{{"model", params.model.empty() ? default_model_ : params.model},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
    if (params.seed != 0) body["seed"] = params.seed;
    json wire_messages = json::array();
    for (const auto& msg : messages) wire_messages.push_back(msg.to_wire_json());
    body["messages"] = wire_messages;
    if (!tool_schemas.empty()) {
        json tools = json::array();
        for (const auto& schema : tool_schemas) tools.push_back(schema);
        body["tools"] = tools;
    }

    limiter_.acquire();
    httplib::Client client(parts.host, parts.port);
    client.set_read_timeout(timeout_s_, 0);
    client.set_connection_timeout(timeout_s_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(parts.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransientBackendError("chat endpoint unreachable: " + url_);
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientBackendError("chat endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }
    try {
        const json doc = json::parse(res->body);
        const json& message = doc.at("choices").at(0).at("message");
        ChatMessage reply = ChatMessage::from_wire_json(message);
        reply.model = doc.value("model", params.model.empty() ? default_model_ : params.model);
        return reply;
    } catch (const json::exception& e) {
        throw TransientBackendError(std::string("malformed backend response: ") + e.what());
    }
}

std::string RemoteChatBackend::id() const {
    return default_model_.empty() ? url_ : default_model_;
}

}  // namespace toolflow
