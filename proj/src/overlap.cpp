#include "toolflow/overlap.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "toolflow/synthesizer.hpp"
#include "toolflow/tokenize.hpp"

namespace toolflow {

json OverlapReport::to_json() const {
    json leaked = json::array();
    for (const auto& tool : leaked_tools) {
        leaked.push_back(json{{"name", tool.name}, {"evidence", tool.evidence},
                              {"value", tool.value}});
    }
    return json{{"method", method},
                {"direction", direction},
                {"leaked_tools", leaked},
                {"leak_ratio", leak_ratio},
                {"test_tool_count", test_tool_count},
                {"params",
                 {{"min_ngram_len", params.min_ngram_len},
                  {"token_contamination_threshold", params.token_contamination_threshold},
                  {"sim_threshold", params.sim_threshold}}}};
}

std::vector<std::vector<std::string>> training_streams_from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open training corpus: " + path);
    std::vector<std::vector<std::string>> streams;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception&) {
            continue;
        }
        if (record.contains("messages")) {
            for (const auto& msg : record.at("messages")) {
                const std::string content = msg.value("content", std::string());
                if (!content.empty()) streams.push_back(tokenize(content));
            }
        }
        if (record.contains("tools")) {
            for (const auto& tool_record : record.at("tools")) {
                streams.push_back(tokenize(tool_record.dump()));
            }
        }
    }
    return streams;
}

OverlapReport ngram_overlap(const std::vector<std::vector<std::string>>& train_streams,
                            const ToolCatalog& test_tools, int min_len, double tool_threshold) {
    if (min_len < 1) throw Error("ngram overlap: min_len must be >= 1");
    if (train_streams.empty()) throw Error("ngram overlap: empty training corpus");
    const std::size_t window = static_cast<std::size_t>(min_len);

    // Index windows of exactly min_len: any shared run of length >= min_len
    // contains one, and marking every token of each matching window recovers
    // the full run.
    std::unordered_set<std::string> index;
    for (const auto& stream : train_streams) {
        if (stream.size() < window) continue;
        for (std::size_t i = 0; i + window <= stream.size(); ++i) {
            index.insert(join_ngram(stream, i, window));
        }
    }

    OverlapReport report;
    report.method = "ngram";
    report.params.min_ngram_len = min_len;
    report.params.token_contamination_threshold = tool_threshold;
    report.test_tool_count = static_cast<int>(test_tools.tools.size());

    for (const auto& tool : test_tools.tools) {
        const auto tokens = tokenize(tool.canonical_text());
        if (tokens.empty()) continue;
        std::vector<char> contaminated(tokens.size(), 0);
        std::string witness;
        if (tokens.size() >= window) {
            for (std::size_t i = 0; i + window <= tokens.size(); ++i) {
                const std::string gram = join_ngram(tokens, i, window);
                if (index.count(gram)) {
                    if (witness.empty()) witness = gram;
                    std::fill(contaminated.begin() + static_cast<std::ptrdiff_t>(i),
                              contaminated.begin() + static_cast<std::ptrdiff_t>(i + window), 1);
                }
            }
        }
        const auto hits = static_cast<std::size_t>(
            std::count(contaminated.begin(), contaminated.end(), 1));
        const double fraction = static_cast<double>(hits) / static_cast<double>(tokens.size());
        if (fraction > tool_threshold) {
            report.leaked_tools.push_back(LeakedTool{tool.name, witness, fraction});
        }
    }
    std::sort(report.leaked_tools.begin(), report.leaked_tools.end(),
              [](const LeakedTool& a, const LeakedTool& b) { return a.name < b.name; });
    report.leak_ratio = report.test_tool_count == 0
                            ? 0.0
                            : 100.0 * static_cast<double>(report.leaked_tools.size()) /
                                  static_cast<double>(report.test_tool_count);
    return report;
}

OverlapReport similarity_overlap(const ToolCatalog& train_tools, const ToolCatalog& test_tools,
                                 EmbeddingProvider& provider, double sim_threshold) {
    std::vector<std::string> texts;
    for (const auto& tool : train_tools.tools) texts.push_back(tool.canonical_text());
    for (const auto& tool : test_tools.tools) texts.push_back(tool.canonical_text());
    const auto vectors = provider.embed(texts);
    const std::size_t n_train = train_tools.tools.size();

    OverlapReport report;
    report.method = "similarity";
    report.params.sim_threshold = sim_threshold;
    report.test_tool_count = static_cast<int>(test_tools.tools.size());

    for (std::size_t t = 0; t < test_tools.tools.size(); ++t) {
        const auto& test_vec = vectors[n_train + t];
        double best = -1.0;
        std::size_t best_train = 0;
        for (std::size_t s = 0; s < n_train; ++s) {
            const double sim = cosine(test_vec, vectors[s]);
            if (sim > best) {
                best = sim;
                best_train = s;
            }
        }
        if (n_train > 0 && best > sim_threshold) {
            report.leaked_tools.push_back(LeakedTool{test_tools.tools[t].name,
                                                     train_tools.tools[best_train].name, best});
        }
    }
    std::sort(report.leaked_tools.begin(), report.leaked_tools.end(),
              [](const LeakedTool& a, const LeakedTool& b) { return a.name < b.name; });
    report.leak_ratio = report.test_tool_count == 0
                            ? 0.0
                            : 100.0 * static_cast<double>(report.leaked_tools.size()) /
                                  static_cast<double>(report.test_tool_count);
    return report;
}

}  // namespace toolflow
