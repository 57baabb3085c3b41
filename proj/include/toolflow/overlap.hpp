#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/embedding.hpp"
#include "toolflow/tool_catalog.hpp"

namespace toolflow {

struct OverlapParams {
    int min_ngram_len = 11;                      // "longer than 10 tokens"
    double token_contamination_threshold = 0.10;  // leaked when fraction exceeds this
    double sim_threshold = 0.9;
};

struct LeakedTool {
    std::string name;
    std::string evidence;  // witness n-gram, or best-matching train tool
    double value = 0.0;    // contaminated fraction, or cosine
};

struct OverlapReport {
    std::string method;  // "ngram" | "similarity"
    std::string direction = "train->test";
    std::vector<LeakedTool> leaked_tools;
    double leak_ratio = 0.0;  // 100 * |leaked| / |test tools|
    int test_tool_count = 0;
    OverlapParams params;

    json to_json() const;
};

// Token streams the n-gram index is built from: every message content plus
// every canonical tool serialization found in a training JSONL corpus.
std::vector<std::vector<std::string>> training_streams_from_jsonl(const std::string& path);

// A test-tool token counts as contaminated when it sits inside a token window
// of min_len shared with any training stream; the tool leaks when the
// contaminated fraction exceeds tool_threshold.
OverlapReport ngram_overlap(const std::vector<std::vector<std::string>>& train_streams,
                            const ToolCatalog& test_tools, int min_len = 11,
                            double tool_threshold = 0.10);

// Whole-tool embedding comparison: leaked when the best cosine against any
// training tool exceeds sim_threshold.
OverlapReport similarity_overlap(const ToolCatalog& train_tools, const ToolCatalog& test_tools,
                                 EmbeddingProvider& provider, double sim_threshold = 0.9);

}  // namespace toolflow
