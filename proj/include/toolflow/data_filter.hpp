#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "toolflow/synthesizer.hpp"

namespace toolflow {

// Rule ids follow the report vocabulary:
//   R0 record does not parse as a dialogue
//   R1 tool calls carry JSON-object arguments and name a subset tool
//   R2 required parameters present with schema-conformant types, no
//      undeclared argument keys
//   R3 status is complete
//   R4 at least one tool-call-bearing assistant turn
//   R5 no empty message contents (tool-call-only assistant turns exempt)
//   R6 role grammar holds
struct FilterRules {
    bool r1 = true;
    bool r2 = true;
    bool r3 = true;
    bool r4 = true;
    bool r5 = true;
    bool r6 = true;

    // Accepts ids like "R4"; throws ConfigError on unknown ids.
    void disable(const std::string& rule_id);
    bool enabled(const std::string& rule_id) const;
};

struct DialogueVerdict {
    std::string id;
    bool kept = false;
    std::vector<std::string> reasons;
};

struct FilterReport {
    int kept = 0;
    int dropped = 0;
    std::map<std::string, int> reasons;
    std::vector<DialogueVerdict> verdicts;

    json to_json() const;
};

// All enabled rules a dialogue violates (no short-circuiting, so reports
// carry complete per-rule counts).
std::vector<std::string> check_dialogue(const Dialogue& dialogue, const FilterRules& rules);

// Order-preserving filter over in-memory dialogues.
std::pair<std::vector<Dialogue>, FilterReport> filter_dialogues(
    const std::vector<Dialogue>& dialogues, const FilterRules& rules = {});

// Line-level filter: unparseable lines drop under R0 with the parse error
// recorded. Kept lines are copied through byte-identical.
FilterReport filter_jsonl(const std::string& in_path, const std::string& out_path,
                          const FilterRules& rules = {});

}  // namespace toolflow
