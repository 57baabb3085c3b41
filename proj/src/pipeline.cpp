#include "toolflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>

#include "toolflow/planner.hpp"

namespace toolflow {

namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value && *value ? std::string(value) : fallback;
}

std::string zero_pad(long long value, int width) {
    std::string digits = std::to_string(value);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return digits;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.catalog_path = j.value("catalog", std::string());
    c.catalog_mode = j.value("catalog_mode", std::string("strict"));
    if (j.contains("embedding")) {
        const json& e = j.at("embedding");
        c.embedding.provider = e.value("provider", std::string("mock"));
        c.embedding.cache = e.value("cache", std::string());
        c.embedding.endpoint = e.value("endpoint", std::string());
        c.embedding.model = e.value("model", std::string());
    }
    if (j.contains("graph")) {
        const json& g = j.at("graph");
        c.graph.tau = g.value("tau", 0.82);
        c.graph.include_pp = g.value("include_pp", true);
        c.graph.include_pr = g.value("include_pr", true);
        c.graph.file = g.value("file", std::string());
        c.graph_sampling = g.value("sampling", true);
    }
    if (j.contains("plan")) {
        const json& p = j.at("plan");
        c.plan.enabled = p.value("enabled", true);
        c.plan.min_items = p.value("min_items", 3);
        c.plan.max_items = p.value("max_items", 8);
        c.plan.retries = p.value("retries", 2);
    }
    c.subset_size = j.value("subset_size", 4);
    c.count = j.value("count", 8);
    c.attempt_cap = j.value("attempt_cap", 0LL);
    c.seed = j.value("seed", std::uint64_t{42});
    c.workers = j.value("workers", 1);
    if (j.contains("backends")) {
        const json& b = j.at("backends");
        c.backends.kind = b.value("kind", std::string("mock"));
        c.backends.script_path = b.value("script", std::string());
        c.backends.endpoint = b.value("endpoint", std::string());
        c.backends.requests_per_minute = b.value("requests_per_minute", 0);
        c.backends.retries = b.value("retries", 2);
        c.backends.backoff_ms = b.value("backoff_ms", 50);
        if (b.contains("pools")) {
            c.backends.pools =
                b.at("pools").get<std::map<std::string, std::vector<std::string>>>();
        }
    }
    if (j.contains("agents")) {
        const json& a = j.at("agents");
        c.agents.turn_limit = a.value("turn_limit", 16);
        c.agents.retries = a.value("retries", 2);
        c.agents.temperature = a.value("temperature", 0.7);
        c.agents.max_tokens = a.value("max_tokens", 1024);
    }
    if (j.contains("filter") && j.at("filter").contains("disabled")) {
        c.filter_disabled = j.at("filter").at("disabled").get<std::vector<std::string>>();
    }
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        c.metrics.scope = m.value("scope", std::string("natural"));
        c.metrics.rubric_sample = m.value("rubric_sample", 0);
        if (m.contains("nli")) {
            const json& n = m.at("nli");
            c.metrics.nli.kind = n.value("kind", std::string("mock"));
            c.metrics.nli.entail_threshold = n.value("entail_threshold", 0.35);
            c.metrics.nli.contradiction_threshold = n.value("contradiction_threshold", 0.05);
            c.metrics.nli.endpoint = n.value("endpoint", std::string());
        }
    }
    if (j.contains("outputs")) c.out_dir = j.at("outputs").value("dir", std::string("out"));
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    try {
        return from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
}

json PipelineConfig::to_json() const {
    return json{
        {"catalog", catalog_path},
        {"catalog_mode", catalog_mode},
        {"embedding",
         {{"provider", embedding.provider},
          {"cache", embedding.cache},
          {"endpoint", embedding.endpoint},
          {"model", embedding.model}}},
        {"graph",
         {{"tau", graph.tau},
          {"include_pp", graph.include_pp},
          {"include_pr", graph.include_pr},
          {"file", graph.file},
          {"sampling", graph_sampling}}},
        {"plan",
         {{"enabled", plan.enabled},
          {"min_items", plan.min_items},
          {"max_items", plan.max_items},
          {"retries", plan.retries}}},
        {"subset_size", subset_size},
        {"count", count},
        {"attempt_cap", attempt_cap},
        {"seed", seed},
        {"workers", workers},
        {"backends",
         {{"kind", backends.kind},
          {"script", backends.script_path},
          {"endpoint", backends.endpoint},
          {"requests_per_minute", backends.requests_per_minute},
          {"retries", backends.retries},
          {"backoff_ms", backends.backoff_ms},
          {"pools", backends.pools}}},
        {"agents",
         {{"turn_limit", agents.turn_limit},
          {"retries", agents.retries},
          {"temperature", agents.temperature},
          {"max_tokens", agents.max_tokens}}},
        {"filter", {{"disabled", filter_disabled}}},
        {"metrics",
         {{"scope", metrics.scope},
          {"rubric_sample", metrics.rubric_sample},
          {"nli",
           {{"kind", metrics.nli.kind},
            {"entail_threshold", metrics.nli.entail_threshold},
            {"contradiction_threshold", metrics.nli.contradiction_threshold},
            {"endpoint", metrics.nli.endpoint}}}}},
        {"outputs", {{"dir", out_dir}}}};
}

std::string PipelineConfig::digest() const {
    json j = to_json();
    j.erase("outputs");
    j.erase("workers");
    return content_digest(j.dump());
}

void PipelineConfig::validate() const {
    if (catalog_path.empty()) throw ConfigError("config: catalog path is required");
    if (!fs::exists(catalog_path)) {
        throw ConfigError("config: catalog path does not exist: " + catalog_path);
    }
    if (catalog_mode != "strict" && catalog_mode != "lenient") {
        throw ConfigError("config: catalog_mode must be strict or lenient");
    }
    if (subset_size < 1) throw ConfigError("config: subset_size must be >= 1");
    if (count < 1) throw ConfigError("config: count must be >= 1");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (agents.turn_limit < plan.max_items) {
        throw ConfigError("config: turn_limit must be >= plan max_items");
    }
    if (!(graph.tau > 0.0 && graph.tau < 1.0)) throw ConfigError("config: tau must be in (0, 1)");
    if (embedding.provider != "mock" && embedding.provider != "remote") {
        throw ConfigError("config: embedding provider must be mock or remote");
    }
    if (backends.kind != "mock" && backends.kind != "scripted" && backends.kind != "remote") {
        throw ConfigError("config: backend kind must be mock, scripted, or remote");
    }
    if (backends.kind == "scripted" && !fs::exists(backends.script_path)) {
        throw ConfigError("config: scripted backend needs an existing script file");
    }
    if (!graph.file.empty() && !fs::exists(graph.file)) {
        throw ConfigError("config: graph file does not exist: " + graph.file);
    }
    if (metrics.scope != "natural" && metrics.scope != "full") {
        throw ConfigError("config: metrics scope must be natural or full");
    }
    FilterRules probe;
    for (const auto& rule : filter_disabled) probe.disable(rule);
}

json RunManifest::to_json() const {
    json record_list = json::array();
    for (const auto& r : records) {
        record_list.push_back(json{{"attempt", r.attempt},
                                   {"id", r.id},
                                   {"status", r.status},
                                   {"kept", r.kept},
                                   {"reasons", r.reasons}});
    }
    return json{{"config_digest", config_digest},
                {"version", version},
                {"attempts", attempts},
                {"kept", kept},
                {"dropped", dropped},
                {"failed", failed},
                {"records", record_list},
                {"wall_ms", wall_ms},
                {"completed", completed}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.config_digest = j.at("config_digest").get<std::string>();
    m.version = j.value("version", std::string());
    m.attempts = j.value("attempts", 0LL);
    m.kept = j.value("kept", 0);
    m.dropped = j.value("dropped", 0);
    m.failed = j.value("failed", 0);
    if (j.contains("records")) {
        for (const auto& r : j.at("records")) {
            AttemptRecord record;
            record.attempt = r.at("attempt").get<long long>();
            record.id = r.at("id").get<std::string>();
            record.status = r.at("status").get<std::string>();
            record.kept = r.at("kept").get<bool>();
            record.reasons = r.at("reasons").get<std::vector<std::string>>();
            m.records.push_back(std::move(record));
        }
    }
    m.wall_ms = j.value("wall_ms", 0.0);
    m.completed = j.value("completed", false);
    return m;
}

std::unique_ptr<ChatBackend> make_chat_backend(const BackendSettings& settings) {
    if (settings.kind == "mock") {
        return std::make_unique<StructuredMockBackend>();
    }
    if (settings.kind == "scripted") {
        return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(settings.script_path));
    }
    if (settings.kind == "remote") {
        const std::string url = env_or("TOOLFLOW_CHAT_URL", settings.endpoint);
        if (url.empty()) {
            throw ConfigError("remote backend: set TOOLFLOW_CHAT_URL or backends.endpoint");
        }
        std::string default_model;
        auto it = settings.pools.find("assistant");
        if (it != settings.pools.end() && !it->second.empty()) default_model = it->second.front();
        return std::make_unique<RemoteChatBackend>(url, env_or("TOOLFLOW_API_KEY", ""),
                                                   default_model, settings.requests_per_minute);
    }
    throw ConfigError("unknown backend kind: '" + settings.kind + "'");
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSettings& settings) {
    if (settings.provider == "mock") {
        return std::make_unique<HashEmbeddingProvider>();
    }
    if (settings.provider == "remote") {
        const std::string url = env_or("TOOLFLOW_EMBED_URL", settings.endpoint);
        if (url.empty()) {
            throw ConfigError("remote embeddings: set TOOLFLOW_EMBED_URL or embedding.endpoint");
        }
        return std::make_unique<RemoteEmbeddingProvider>(url, env_or("TOOLFLOW_API_KEY", ""),
                                                         settings.model);
    }
    throw ConfigError("unknown embedding provider: '" + settings.provider + "'");
}

std::unique_ptr<NliClassifier> make_nli_classifier(const NliSettings& settings) {
    if (settings.kind == "mock") {
        return std::make_unique<LexicalOverlapNli>(settings.entail_threshold,
                                                   settings.contradiction_threshold);
    }
    if (settings.kind == "remote") {
        const std::string url = env_or("TOOLFLOW_NLI_URL", settings.endpoint);
        if (url.empty()) {
            throw ConfigError("remote NLI: set TOOLFLOW_NLI_URL or metrics.nli.endpoint");
        }
        return std::make_unique<RemoteNli>(url, env_or("TOOLFLOW_API_KEY", ""));
    }
    throw ConfigError("unknown NLI kind: '" + settings.kind + "'");
}

std::vector<Dialogue> load_dialogues_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dialogues file: " + path);
    std::vector<Dialogue> dialogues;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        dialogues.push_back(Dialogue::from_json(json::parse(line)));
    }
    return dialogues;
}

namespace {

// Everything one run needs, built once and shared by the synthesis workers.
struct RunContext {
    PipelineConfig config;
    ToolCatalog catalog;
    std::unique_ptr<EmbeddingProvider> provider;
    std::unique_ptr<ToolGraph> graph;  // null when graph sampling is off
    std::unique_ptr<ChatBackend> backend;
    Clock clock;
    FilterRules rules;
};

RunContext build_context(const PipelineConfig& config) {
    config.validate();
    RunContext ctx;
    ctx.config = config;
    ctx.catalog = load_catalog(config.catalog_path,
                               config.catalog_mode == "strict" ? LoadMode::Strict
                                                               : LoadMode::Lenient);
    ctx.provider = make_embedding_provider(config.embedding);
    if (config.graph_sampling) {
        if (!config.graph.file.empty()) {
            ctx.graph = std::make_unique<ToolGraph>(
                load_graph_checked(config.graph.file, ctx.catalog));
        } else {
            const EmbeddingStore store =
                embed_catalog(ctx.catalog, *ctx.provider, config.embedding.cache);
            GraphConfig gc{config.graph.tau, config.graph.include_pp, config.graph.include_pr};
            ctx.graph = std::make_unique<ToolGraph>(build_graph(ctx.catalog, store, gc));
        }
    }
    ctx.backend = make_chat_backend(config.backends);
    // Mock runs must be byte-stable across invocations, so they use a fixed
    // clock; wall-clock stamps only make sense against live endpoints.
    if (config.backends.kind == "remote") {
        ctx.clock = &unix_now;
    } else {
        ctx.clock = [] { return std::int64_t{0}; };
    }
    for (const auto& rule : config.filter_disabled) ctx.rules.disable(rule);
    return ctx;
}

std::vector<int> uniform_distinct_nodes(int n_nodes, int n, std::uint64_t seed) {
    if (n > n_nodes) {
        throw GraphError("sample size " + std::to_string(n) + " exceeds node count " +
                         std::to_string(n_nodes));
    }
    std::vector<int> nodes(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) nodes[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < n; ++k) {
        const std::size_t pick =
            static_cast<std::size_t>(k) + uniform_index(rng, nodes.size() - static_cast<std::size_t>(k));
        std::swap(nodes[static_cast<std::size_t>(k)], nodes[pick]);
    }
    return std::vector<int>(nodes.begin(), nodes.begin() + n);
}

std::string pool_model(const BackendSettings& backends, const std::string& role,
                       std::uint64_t seed) {
    auto it = backends.pools.find(role);
    if (it == backends.pools.end() || it->second.empty()) return "";
    return pick_model(it->second, seed);
}

Dialogue synthesize_attempt(const RunContext& ctx, long long attempt) {
    const PipelineConfig& config = ctx.config;
    const std::uint64_t attempt_seed = derive_seed(config.seed, static_cast<std::uint64_t>(attempt));

    Dialogue dialogue;
    try {
        std::vector<int> nodes;
        if (ctx.graph) {
            nodes = sample_subset(*ctx.graph, config.subset_size, derive_seed(attempt_seed, 10));
        } else {
            nodes = uniform_distinct_nodes(static_cast<int>(ctx.catalog.tools.size()),
                                           config.subset_size, derive_seed(attempt_seed, 10));
        }
        std::vector<ToolSpec> tools;
        for (int node : nodes) tools.push_back(ctx.catalog.tools[static_cast<std::size_t>(node)]);

        RetryPolicy retry{config.backends.retries, config.backends.backoff_ms, 2.0};

        std::optional<DialoguePlan> plan;
        if (config.plan.enabled) {
            PlannerConfig planner_config;
            planner_config.retries = config.plan.retries;
            planner_config.min_items = config.plan.min_items;
            planner_config.max_items = config.plan.max_items;
            planner_config.params.temperature = config.agents.temperature;
            planner_config.params.max_tokens = config.agents.max_tokens;
            planner_config.params.seed = derive_seed(attempt_seed, 30);
            planner_config.params.model =
                pool_model(config.backends, "planner", derive_seed(attempt_seed, 21));
            planner_config.retry_policy = retry;
            plan = generate_plan(tools, *ctx.backend, planner_config);
        }

        AgentConfig agent_config;
        agent_config.turn_limit = config.agents.turn_limit;
        agent_config.retries = config.agents.retries;
        agent_config.retry_policy = retry;
        for (GenerationParams* params : {&agent_config.user_params, &agent_config.assistant_params,
                                         &agent_config.tool_params}) {
            params->temperature = config.agents.temperature;
            params->max_tokens = config.agents.max_tokens;
        }
        agent_config.user_params.model =
            pool_model(config.backends, "user", derive_seed(attempt_seed, 22));
        agent_config.assistant_params.model =
            pool_model(config.backends, "assistant", derive_seed(attempt_seed, 23));
        agent_config.tool_params.model =
            pool_model(config.backends, "tool", derive_seed(attempt_seed, 24));

        AgentBackends agents{ctx.backend.get(), ctx.backend.get(), ctx.backend.get()};
        dialogue = synthesize(plan ? &*plan : nullptr, tools, agents, agent_config, attempt_seed,
                              ctx.clock);
        dialogue.provenance.subset_nodes = nodes;
    } catch (const Error& e) {
        dialogue.status = DialogueStatus::Failed;
        dialogue.provenance.error = e.what();
        dialogue.provenance.seed = attempt_seed;
    }
    dialogue.id = "dlg-" + zero_pad(attempt, 6);
    dialogue.provenance.master_seed = config.seed;
    dialogue.provenance.attempt = attempt;
    dialogue.provenance.sampling = ctx.graph ? "graph" : "uniform";
    dialogue.provenance.plan_present = config.plan.enabled && dialogue.plan.has_value();
    return dialogue;
}

MetricsReport compute_metrics(const RunContext& ctx, const std::vector<Dialogue>& kept) {
    MetricsReport report;
    report.stats = corpus_stats(kept);
    const TextScope scope =
        ctx.config.metrics.scope == "full" ? TextScope::Full : TextScope::NaturalOnly;
    if (!kept.empty()) {
        try {
            report.entropy_bits = shannon_entropy(kept, scope);
        } catch (const Error&) {
        }
        try {
            report.distinct_3 = distinct_n(kept, 3, scope);
        } catch (const Error&) {
        }
        if (!extract_turn_pairs(kept).empty()) {
            report.ss_mean = coherence_ss(kept, *ctx.provider);
            auto nli = make_nli_classifier(ctx.config.metrics.nli);
            report.enr_ratio = coherence_enr(kept, *nli);
        }
        if (ctx.config.metrics.rubric_sample > 0) {
            const int sample =
                std::min<int>(ctx.config.metrics.rubric_sample, static_cast<int>(kept.size()));
            RubricConfig rubric_config;
            rubric_config.params.temperature = 0.0;
            rubric_config.params.model = pool_model(ctx.config.backends, "judge",
                                                    derive_seed(ctx.config.seed, 991));
            report.rubric =
                rubric_eval(kept, *ctx.backend, sample, derive_seed(ctx.config.seed, 999),
                            rubric_config);
        }
    }
    return report;
}

FilterReport report_from_records(const std::vector<AttemptRecord>& records) {
    FilterReport report;
    for (const auto& record : records) {
        DialogueVerdict verdict{record.id, record.kept, record.reasons};
        if (record.kept) {
            ++report.kept;
        } else {
            ++report.dropped;
            for (const auto& reason : record.reasons) ++report.reasons[reason];
        }
        report.verdicts.push_back(std::move(verdict));
    }
    return report;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks) {
    const auto wall_start = std::chrono::steady_clock::now();
    RunContext ctx = build_context(config);

    fs::create_directories(config.out_dir);
    const std::string manifest_path = (fs::path(config.out_dir) / "manifest.json").string();
    const std::string raw_path = (fs::path(config.out_dir) / "dialogues.raw.jsonl").string();
    const std::string kept_path = (fs::path(config.out_dir) / "dialogues.jsonl").string();

    RunManifest manifest;
    manifest.config_digest = config.digest();
    if (fs::exists(manifest_path)) {
        const RunManifest previous = RunManifest::from_json(json::parse(read_text_file(manifest_path)));
        if (previous.config_digest != manifest.config_digest) {
            throw ConfigError("refusing to resume: config digest changed (" +
                              previous.config_digest + " -> " + manifest.config_digest + ")");
        }
        manifest = previous;
        manifest.completed = false;
    } else {
        write_text_file(raw_path, "");
        write_text_file(kept_path, "");
    }

    auto persist_manifest = [&] {
        manifest.wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - wall_start)
                               .count();
        write_text_file(manifest_path, manifest.to_json().dump() + "\n");
    };

    const long long cap = config.effective_attempt_cap();
    while (manifest.kept < config.count && manifest.attempts < cap) {
        const long long wave =
            std::min<long long>(config.workers, cap - manifest.attempts);
        std::vector<std::future<Dialogue>> futures;
        futures.reserve(static_cast<std::size_t>(wave));
        for (long long w = 0; w < wave; ++w) {
            const long long attempt = manifest.attempts + w;
            futures.push_back(std::async(std::launch::async,
                                         [&ctx, attempt] { return synthesize_attempt(ctx, attempt); }));
        }
        for (auto& future : futures) {
            if (manifest.kept >= config.count) break;  // later futures are discarded
            const Dialogue dialogue = future.get();
            append_line(raw_path, dialogue.to_json().dump());

            AttemptRecord record;
            record.attempt = dialogue.provenance.attempt;
            record.id = dialogue.id;
            record.status = to_string(dialogue.status);
            record.reasons = check_dialogue(dialogue, ctx.rules);
            record.kept = record.reasons.empty();
            if (dialogue.status == DialogueStatus::Failed) ++manifest.failed;
            if (record.kept) {
                append_line(kept_path, dialogue.to_json().dump());
                ++manifest.kept;
            } else {
                ++manifest.dropped;
            }
            manifest.records.push_back(record);
            ++manifest.attempts;
            persist_manifest();
            if (hooks.after_attempt) hooks.after_attempt(manifest.attempts);
        }
    }

    const FilterReport filter_report = report_from_records(manifest.records);
    write_text_file((fs::path(config.out_dir) / "filter_report.json").string(),
                    filter_report.to_json().dump() + "\n");

    if (manifest.kept < config.count) {
        persist_manifest();
        throw AttemptCapError("attempt cap " + std::to_string(cap) + " reached with only " +
                              std::to_string(manifest.kept) + " of " +
                              std::to_string(config.count) + " dialogues kept");
    }

    const std::vector<Dialogue> kept = load_dialogues_jsonl(kept_path);
    const MetricsReport metrics = compute_metrics(ctx, kept);
    write_text_file((fs::path(config.out_dir) / "metrics_report.json").string(),
                    metrics.to_json().dump() + "\n");

    manifest.completed = true;
    persist_manifest();
    return manifest;
}

RunManifest run_ablation(PipelineConfig config, bool graph_on, bool plan_on,
                         const PipelineHooks& hooks) {
    config.graph_sampling = graph_on;
    config.plan.enabled = plan_on;
    return run_pipeline(config, hooks);
}

void synthesize_corpus(const PipelineConfig& config, const std::string& out_path) {
    RunContext ctx = build_context(config);
    write_text_file(out_path, "");
    long long done = 0;
    while (done < config.count) {
        const long long wave = std::min<long long>(config.workers, config.count - done);
        std::vector<std::future<Dialogue>> futures;
        for (long long w = 0; w < wave; ++w) {
            const long long attempt = done + w;
            futures.push_back(std::async(std::launch::async,
                                         [&ctx, attempt] { return synthesize_attempt(ctx, attempt); }));
        }
        for (auto& future : futures) {
            append_line(out_path, future.get().to_json().dump());
            ++done;
        }
    }
}

}  // namespace toolflow
