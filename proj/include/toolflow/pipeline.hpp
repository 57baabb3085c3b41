#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/data_filter.hpp"
#include "toolflow/embedding.hpp"
#include "toolflow/llm_client.hpp"
#include "toolflow/quality_eval.hpp"
#include "toolflow/synthesizer.hpp"
#include "toolflow/tool_graph.hpp"

namespace toolflow {

struct BackendSettings {
    std::string kind = "mock";  // mock | scripted | remote
    std::string script_path;    // scripted backends
    std::string endpoint;       // remote; falls back to TOOLFLOW_CHAT_URL
    int requests_per_minute = 0;
    int retries = 2;
    int backoff_ms = 50;
    // Per-role model pools (planner/user/assistant/tool/judge); one model is
    // drawn per dialogue per role.
    std::map<std::string, std::vector<std::string>> pools;
};

struct EmbeddingSettings {
    std::string provider = "mock";  // mock | remote
    std::string cache;
    std::string endpoint;  // remote; falls back to TOOLFLOW_EMBED_URL
    std::string model;
};

struct NliSettings {
    std::string kind = "mock";  // mock | remote
    double entail_threshold = 0.35;
    double contradiction_threshold = 0.05;
    std::string endpoint;  // remote; falls back to TOOLFLOW_NLI_URL
};

struct GraphSettings {
    double tau = 0.82;
    bool include_pp = true;
    bool include_pr = true;
    std::string file;  // prebuilt graph; empty builds from the catalog
};

struct PlanSettings {
    bool enabled = true;
    int min_items = 3;
    int max_items = 8;
    int retries = 2;
};

struct AgentSettings {
    int turn_limit = 16;
    int retries = 2;
    double temperature = 0.7;
    int max_tokens = 1024;
};

struct MetricsSettings {
    std::string scope = "natural";  // natural | full
    int rubric_sample = 0;          // 0 skips the judge pass
    NliSettings nli;
};

struct PipelineConfig {
    std::string catalog_path;
    std::string catalog_mode = "strict";  // strict | lenient
    EmbeddingSettings embedding;
    GraphSettings graph;
    bool graph_sampling = true;  // ablation switch: random walk vs uniform
    PlanSettings plan;           // plan.enabled is the other ablation switch
    int subset_size = 4;
    int count = 8;              // post-filter target K
    long long attempt_cap = 0;  // 0 defaults to 2 * count
    std::uint64_t seed = 42;
    int workers = 1;
    BackendSettings backends;
    AgentSettings agents;
    std::vector<std::string> filter_disabled;
    MetricsSettings metrics;
    std::string out_dir = "out";

    static PipelineConfig from_json(const json& j);
    static PipelineConfig from_file(const std::string& path);
    json to_json() const;

    // Identity for resume checks. Output location and worker count do not
    // change what gets produced, so they stay out of the digest.
    std::string digest() const;

    void validate() const;  // throws ConfigError
    long long effective_attempt_cap() const { return attempt_cap > 0 ? attempt_cap : 2LL * count; }
};

struct AttemptRecord {
    long long attempt = 0;
    std::string id;
    std::string status;
    bool kept = false;
    std::vector<std::string> reasons;
};

struct RunManifest {
    std::string config_digest;
    std::string version = kPipelineVersion;
    long long attempts = 0;
    int kept = 0;
    int dropped = 0;
    int failed = 0;  // dialogues that ended with status failed
    std::vector<AttemptRecord> records;
    double wall_ms = 0.0;
    bool completed = false;

    json to_json() const;
    static RunManifest from_json(const json& j);
};

struct PipelineHooks {
    // Called after each committed attempt; lets tests interrupt mid-run.
    std::function<void(long long attempts_done)> after_attempt;
};

// Full run: sample -> plan -> synthesize -> filter -> metrics, resumable at
// dialogue granularity from <out_dir>/manifest.json. Produces
// dialogues.raw.jsonl, dialogues.jsonl, filter_report.json,
// metrics_report.json, and manifest.json under config.out_dir. Throws
// AttemptCapError when the cap is hit before K dialogues survive the filter.
RunManifest run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks = {});

// run_pipeline with the two ablation switches set explicitly.
RunManifest run_ablation(PipelineConfig config, bool graph_on, bool plan_on,
                         const PipelineHooks& hooks = {});

// Synthesis stage alone: writes exactly `count` raw dialogues to out_path.
void synthesize_corpus(const PipelineConfig& config, const std::string& out_path);

// Factories shared by the pipeline and the CLI subcommands.
std::unique_ptr<ChatBackend> make_chat_backend(const BackendSettings& settings);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSettings& settings);
std::unique_ptr<NliClassifier> make_nli_classifier(const NliSettings& settings);

std::vector<Dialogue> load_dialogues_jsonl(const std::string& path);

}  // namespace toolflow
