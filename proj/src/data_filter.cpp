#include "toolflow/data_filter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace toolflow {

void FilterRules::disable(const std::string& rule_id) {
    if (rule_id == "R1") {
        r1 = false;
    } else if (rule_id == "R2") {
        r2 = false;
    } else if (rule_id == "R3") {
        r3 = false;
    } else if (rule_id == "R4") {
        r4 = false;
    } else if (rule_id == "R5") {
        r5 = false;
    } else if (rule_id == "R6") {
        r6 = false;
    } else {
        throw ConfigError("unknown filter rule id: '" + rule_id + "'");
    }
}

bool FilterRules::enabled(const std::string& rule_id) const {
    if (rule_id == "R1") return r1;
    if (rule_id == "R2") return r2;
    if (rule_id == "R3") return r3;
    if (rule_id == "R4") return r4;
    if (rule_id == "R5") return r5;
    if (rule_id == "R6") return r6;
    throw ConfigError("unknown filter rule id: '" + rule_id + "'");
}

json FilterReport::to_json() const {
    json verdict_list = json::array();
    for (const auto& v : verdicts) {
        verdict_list.push_back(json{{"id", v.id}, {"kept", v.kept}, {"reasons", v.reasons}});
    }
    return json{{"kept", kept}, {"dropped", dropped}, {"reasons", reasons},
                {"verdicts", verdict_list}};
}

namespace {

bool is_blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::vector<std::string> check_dialogue(const Dialogue& dialogue, const FilterRules& rules) {
    std::vector<std::string> violated;

    if (rules.r1 || rules.r2) {
        bool r1_bad = false;
        bool r2_bad = false;
        for (const auto& msg : dialogue.messages) {
            for (const auto& call : msg.tool_calls) {
                const ToolSpec* spec = nullptr;
                for (const auto& tool : dialogue.tools) {
                    if (tool.name == call.name) spec = &tool;
                }
                json args;
                bool args_ok = false;
                try {
                    args = json::parse(call.arguments);
                    args_ok = args.is_object();
                } catch (const json::exception&) {
                }
                if (!spec || !args_ok) {
                    r1_bad = true;
                    continue;  // R2 only judges calls R1 accepts
                }
                for (const auto& param : spec->parameters) {
                    if (!param.required) continue;
                    if (!args.contains(param.name)) {
                        r2_bad = true;
                    }
                }
                for (const auto& [key, value] : args.items()) {
                    const ParameterSpec* param = spec->find_parameter(key);
                    if (!param || !value_matches_type(value, param->type)) {
                        r2_bad = true;
                    }
                }
            }
        }
        if (rules.r1 && r1_bad) violated.push_back("R1");
        if (rules.r2 && r2_bad) violated.push_back("R2");
    }

    if (rules.r3 && dialogue.status != DialogueStatus::Complete) violated.push_back("R3");

    if (rules.r4) {
        const bool any_call_turn = std::any_of(
            dialogue.messages.begin(), dialogue.messages.end(), [](const ChatMessage& msg) {
                return msg.role == Role::Assistant && !msg.tool_calls.empty();
            });
        if (!any_call_turn) violated.push_back("R4");
    }

    if (rules.r5) {
        const bool any_empty = std::any_of(
            dialogue.messages.begin(), dialogue.messages.end(), [](const ChatMessage& msg) {
                if (msg.role == Role::Assistant && !msg.tool_calls.empty()) return false;
                return is_blank(msg.content);
            });
        if (any_empty) violated.push_back("R5");
    }

    if (rules.r6 && !check_role_grammar(dialogue.messages)) violated.push_back("R6");

    return violated;
}

std::pair<std::vector<Dialogue>, FilterReport> filter_dialogues(
    const std::vector<Dialogue>& dialogues, const FilterRules& rules) {
    std::vector<Dialogue> kept;
    FilterReport report;
    for (const auto& dialogue : dialogues) {
        DialogueVerdict verdict;
        verdict.id = dialogue.id;
        verdict.reasons = check_dialogue(dialogue, rules);
        verdict.kept = verdict.reasons.empty();
        if (verdict.kept) {
            kept.push_back(dialogue);
            ++report.kept;
        } else {
            ++report.dropped;
            for (const auto& reason : verdict.reasons) ++report.reasons[reason];
        }
        report.verdicts.push_back(std::move(verdict));
    }
    return {std::move(kept), std::move(report)};
}

FilterReport filter_jsonl(const std::string& in_path, const std::string& out_path,
                          const FilterRules& rules) {
    std::ifstream in(in_path);
    if (!in) throw Error("cannot open input: " + in_path);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output: " + out_path);

    FilterReport report;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        DialogueVerdict verdict;
        try {
            const Dialogue dialogue = Dialogue::from_json(json::parse(line));
            verdict.id = dialogue.id;
            verdict.reasons = check_dialogue(dialogue, rules);
        } catch (const std::exception& e) {
            verdict.id = "line-" + std::to_string(line_no);
            verdict.reasons = {"R0"};
            verdict.kept = false;
            ++report.dropped;
            ++report.reasons["R0"];
            report.verdicts.push_back(std::move(verdict));
            continue;
        }
        verdict.kept = verdict.reasons.empty();
        if (verdict.kept) {
            out << line << "\n";
            ++report.kept;
        } else {
            ++report.dropped;
            for (const auto& reason : verdict.reasons) ++report.reasons[reason];
        }
        report.verdicts.push_back(std::move(verdict));
    }
    return report;
}

}  // namespace toolflow
