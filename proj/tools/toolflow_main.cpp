#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "toolflow/data_filter.hpp"
#include "toolflow/overlap.hpp"
#include "toolflow/pipeline.hpp"
#include "toolflow/planner.hpp"
#include "toolflow/quality_eval.hpp"
#include "toolflow/tool_catalog.hpp"
#include "toolflow/tool_graph.hpp"

using namespace toolflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;
constexpr int kExitAttemptCap = 3;

struct BackendFlags {
    std::string kind = "mock";
    std::string script;
    std::string endpoint;
    std::string model;

    void attach(CLI::App* cmd) {
        cmd->add_option("--backend", kind, "Chat backend kind: mock|scripted|remote")
            ->check(CLI::IsMember({"mock", "scripted", "remote"}));
        cmd->add_option("--script", script, "Script file for --backend scripted");
        cmd->add_option("--endpoint", endpoint, "Chat endpoint URL for --backend remote");
        cmd->add_option("--model", model, "Model id sent to the backend");
    }

    BackendSettings settings() const {
        BackendSettings s;
        s.kind = kind;
        s.script_path = script;
        s.endpoint = endpoint;
        if (!model.empty()) {
            s.pools = {{"planner", {model}}, {"user", {model}},   {"assistant", {model}},
                       {"tool", {model}},    {"judge", {model}}};
        }
        return s;
    }
};

struct ProviderFlags {
    std::string provider = "mock";
    std::string cache;
    std::string endpoint;
    std::string model;

    void attach(CLI::App* cmd) {
        cmd->add_option("--provider", provider, "Embedding provider: mock|remote")
            ->check(CLI::IsMember({"mock", "remote"}));
        cmd->add_option("--cache", cache, "Embedding cache file (JSONL)");
        cmd->add_option("--embed-endpoint", endpoint, "Embeddings endpoint URL");
        cmd->add_option("--embed-model", model, "Embedding model id");
    }

    EmbeddingSettings settings() const {
        return EmbeddingSettings{provider, cache, endpoint, model};
    }
};

void write_report(const std::string& path, const json& body) {
    if (path.empty() || path == "-") {
        std::cout << body.dump(2) << "\n";
    } else {
        write_text_file(path, body.dump(2) + "\n");
        std::cout << "wrote " << path << "\n";
    }
}

ToolGraph obtain_graph(const std::string& graph_path, const ToolCatalog& catalog,
                       const ProviderFlags& provider_flags, double tau, bool no_pp, bool no_pr) {
    if (!graph_path.empty()) {
        return load_graph_checked(graph_path, catalog);
    }
    auto provider = make_embedding_provider(provider_flags.settings());
    const EmbeddingStore store = embed_catalog(catalog, *provider, provider_flags.cache);
    return build_graph(catalog, store, GraphConfig{tau, !no_pp, !no_pr});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toolflow: tool-calling dialogue synthesis and evaluation"};
    app.require_subcommand(1);

    // --- catalog ------------------------------------------------------------
    auto* catalog_cmd = app.add_subcommand("catalog", "Catalog inspection and repair");
    catalog_cmd->require_subcommand(1);

    std::string catalog_path;
    bool lenient = false;
    auto* validate_cmd = catalog_cmd->add_subcommand("validate", "Validate a tool catalog");
    validate_cmd->add_option("path", catalog_path, "Catalog JSON file")->required();
    validate_cmd->add_flag("--lenient", lenient, "Allow missing descriptions");

    std::string enrich_out;
    BackendFlags enrich_backend;
    auto* enrich_cmd =
        catalog_cmd->add_subcommand("enrich", "Fill missing descriptions via a chat backend");
    enrich_cmd->add_option("path", catalog_path, "Catalog JSON file")->required();
    enrich_cmd->add_option("--out", enrich_out, "Output catalog path")->required();
    enrich_backend.attach(enrich_cmd);

    // --- embed ----------------------------------------------------------------
    ProviderFlags embed_provider;
    std::string embed_catalog_path;
    auto* embed_cmd = app.add_subcommand("embed", "Embed catalog fields into a cache file");
    embed_cmd->add_option("--catalog", embed_catalog_path, "Catalog JSON file")->required();
    embed_provider.attach(embed_cmd);

    // --- graph ----------------------------------------------------------------
    auto* graph_cmd = app.add_subcommand("graph", "Tool graph construction and sampling");
    graph_cmd->require_subcommand(1);

    std::string gb_catalog, gb_out;
    double gb_tau = 0.82;
    bool gb_no_pp = false, gb_no_pr = false;
    ProviderFlags gb_provider;
    auto* graph_build_cmd = graph_cmd->add_subcommand("build", "Build the tool graph");
    graph_build_cmd->add_option("--catalog", gb_catalog)->required();
    graph_build_cmd->add_option("--tau", gb_tau, "Similarity threshold");
    graph_build_cmd->add_flag("--no-pp", gb_no_pp, "Disable the parameter-parameter rule");
    graph_build_cmd->add_flag("--no-pr", gb_no_pr, "Disable the return-parameter rule");
    graph_build_cmd->add_option("--out", gb_out, "Graph output file")->required();
    gb_provider.attach(graph_build_cmd);

    std::string gs_graph, gs_catalog;
    int gs_n = 4;
    std::uint64_t gs_seed = 0;
    auto* graph_sample_cmd = graph_cmd->add_subcommand("sample", "Random-walk a tool subset");
    graph_sample_cmd->add_option("--graph", gs_graph)->required();
    graph_sample_cmd->add_option("--n", gs_n, "Subset size");
    graph_sample_cmd->add_option("--seed", gs_seed, "Random seed");
    graph_sample_cmd->add_option("--catalog", gs_catalog, "Catalog, to print tool names");

    // --- plan -------------------------------------------------------------------
    std::string plan_graph, plan_catalog;
    int plan_n = 4;
    std::uint64_t plan_seed = 0;
    double plan_tau = 0.82;
    ProviderFlags plan_provider;
    BackendFlags plan_backend;
    auto* plan_cmd = app.add_subcommand("plan", "Sample a subset and print a dialogue plan");
    plan_cmd->add_option("--catalog", plan_catalog)->required();
    plan_cmd->add_option("--graph", plan_graph, "Prebuilt graph file (else built on the fly)");
    plan_cmd->add_option("--n", plan_n, "Subset size");
    plan_cmd->add_option("--seed", plan_seed, "Random seed");
    plan_cmd->add_option("--tau", plan_tau, "Similarity threshold when building");
    plan_provider.attach(plan_cmd);
    plan_backend.attach(plan_cmd);

    // --- synthesize ----------------------------------------------------------
    std::string syn_catalog, syn_graph, syn_out, syn_config;
    int syn_count = 8, syn_n = 4, syn_workers = 1;
    std::uint64_t syn_seed = 42;
    bool syn_no_graph = false, syn_no_plan = false;
    BackendFlags syn_backend;
    ProviderFlags syn_provider;
    auto* syn_cmd = app.add_subcommand("synthesize", "Synthesize raw dialogues (no filtering)");
    syn_cmd->add_option("--config", syn_config, "Base config file; flags override");
    syn_cmd->add_option("--catalog", syn_catalog);
    syn_cmd->add_option("--graph", syn_graph, "Prebuilt graph file");
    syn_cmd->add_option("--count", syn_count, "Number of dialogues");
    syn_cmd->add_option("--n-tools", syn_n, "Subset size");
    syn_cmd->add_option("--seed", syn_seed, "Master seed");
    syn_cmd->add_option("--out", syn_out, "Output JSONL")->required();
    syn_cmd->add_option("--workers", syn_workers, "Parallel workers");
    syn_cmd->add_flag("--no-graph", syn_no_graph, "Uniform sampling instead of the graph walk");
    syn_cmd->add_flag("--no-plan", syn_no_plan, "Skip plan generation");
    syn_backend.attach(syn_cmd);
    syn_provider.attach(syn_cmd);

    // --- filter -----------------------------------------------------------------
    std::string filter_in, filter_out, filter_report_path;
    std::vector<std::string> filter_disable;
    auto* filter_cmd = app.add_subcommand("filter", "Rule-based dialogue filtering");
    filter_cmd->add_option("--in", filter_in)->required();
    filter_cmd->add_option("--out", filter_out)->required();
    filter_cmd->add_option("--report", filter_report_path, "Filter report JSON");
    filter_cmd->add_option("--disable", filter_disable, "Rule ids to disable (e.g. R4)");

    // --- eval -------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Corpus statistics and quality metrics");
    eval_cmd->require_subcommand(1);
    std::string eval_in, eval_report, eval_scope = "natural", eval_nli = "mock",
                eval_nli_endpoint, eval_pearson_in;
    int eval_sample = 200;
    std::uint64_t eval_seed = 0;
    int eval_ngram = 3;
    ProviderFlags eval_provider;
    BackendFlags eval_backend;

    auto add_eval_common = [&](CLI::App* cmd, bool needs_in = true) {
        if (needs_in) cmd->add_option("--in", eval_in, "Dialogue JSONL")->required();
        cmd->add_option("--report", eval_report, "Report JSON path ('-' for stdout)");
        cmd->add_option("--scope", eval_scope, "Text scope: natural|full")
            ->check(CLI::IsMember({"natural", "full"}));
    };
    auto* eval_stats = eval_cmd->add_subcommand("stats", "Token/call counts");
    add_eval_common(eval_stats);
    auto* eval_entropy = eval_cmd->add_subcommand("entropy", "Word-frequency entropy in bits");
    add_eval_common(eval_entropy);
    auto* eval_distinct = eval_cmd->add_subcommand("distinct", "Distinct n-gram ratio");
    add_eval_common(eval_distinct);
    eval_distinct->add_option("--n", eval_ngram, "n-gram size");
    auto* eval_coherence = eval_cmd->add_subcommand("coherence", "Turn-pair SS and EnR");
    add_eval_common(eval_coherence);
    eval_coherence->add_option("--nli", eval_nli, "NLI classifier: mock|remote")
        ->check(CLI::IsMember({"mock", "remote"}));
    eval_coherence->add_option("--nli-endpoint", eval_nli_endpoint, "NLI endpoint URL");
    eval_provider.attach(eval_coherence);
    auto* eval_rubric = eval_cmd->add_subcommand("rubric", "LLM-judge rubric scoring");
    add_eval_common(eval_rubric);
    eval_rubric->add_option("--sample", eval_sample, "Sample size");
    eval_rubric->add_option("--seed", eval_seed, "Sampling seed");
    eval_backend.attach(eval_rubric);
    auto* eval_pearson = eval_cmd->add_subcommand("pearson", "Correlation of two series");
    eval_pearson->add_option("--in", eval_pearson_in, "JSON file with {\"x\": [...], \"y\": [...]}")
        ->required();
    eval_pearson->add_option("--report", eval_report, "Report JSON path ('-' for stdout)");

    // --- overlap ---------------------------------------------------------------
    auto* overlap_cmd = app.add_subcommand("overlap", "Train/test contamination checks");
    overlap_cmd->require_subcommand(1);
    std::string ov_train, ov_test, ov_report;
    int ov_min_len = 11;
    double ov_tool_threshold = 0.10, ov_sim_threshold = 0.9;
    ProviderFlags ov_provider;
    auto* overlap_ngram_cmd = overlap_cmd->add_subcommand("ngram", "Shared n-gram contamination");
    overlap_ngram_cmd->add_option("--train", ov_train, "Training dialogue JSONL")->required();
    overlap_ngram_cmd->add_option("--test", ov_test, "Test tool catalog JSON")->required();
    overlap_ngram_cmd->add_option("--min-len", ov_min_len, "Minimum shared window length");
    overlap_ngram_cmd->add_option("--tool-threshold", ov_tool_threshold,
                                  "Contaminated-token fraction above which a tool leaks");
    overlap_ngram_cmd->add_option("--report", ov_report, "Report JSON path ('-' for stdout)");
    auto* overlap_sim_cmd = overlap_cmd->add_subcommand("sim", "Whole-tool embedding similarity");
    overlap_sim_cmd->add_option("--train", ov_train, "Training tool catalog JSON")->required();
    overlap_sim_cmd->add_option("--test", ov_test, "Test tool catalog JSON")->required();
    overlap_sim_cmd->add_option("--threshold", ov_sim_threshold, "Cosine threshold");
    overlap_sim_cmd->add_option("--report", ov_report, "Report JSON path ('-' for stdout)");
    ov_provider.attach(overlap_sim_cmd);

    // --- run / ablate -----------------------------------------------------------
    std::string run_config_path, run_out_dir;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_count, run_workers;
    auto* run_cmd = app.add_subcommand("run", "Full pipeline: sample, plan, synthesize, filter, eval");
    run_cmd->add_option("--config", run_config_path, "Pipeline config JSON")->required();
    run_cmd->add_option("--out-dir", run_out_dir, "Override outputs.dir");
    run_cmd->add_option("--seed", run_seed, "Override master seed");
    run_cmd->add_option("--count", run_count, "Override post-filter target K");
    run_cmd->add_option("--workers", run_workers, "Override worker count");

    std::string ablate_graph = "on", ablate_plan = "on";
    auto* ablate_cmd = app.add_subcommand("ablate", "Pipeline run with ablation switches");
    ablate_cmd->add_option("--config", run_config_path, "Pipeline config JSON")->required();
    ablate_cmd->add_option("--graph", ablate_graph, "graph sampling on|off")
        ->check(CLI::IsMember({"on", "off"}));
    ablate_cmd->add_option("--plan", ablate_plan, "plan generation on|off")
        ->check(CLI::IsMember({"on", "off"}));
    ablate_cmd->add_option("--out-dir", run_out_dir, "Override outputs.dir");
    ablate_cmd->add_option("--seed", run_seed, "Override master seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) {
            const ToolCatalog catalog =
                load_catalog(catalog_path, lenient ? LoadMode::Lenient : LoadMode::Strict);
            const auto flagged = catalog.flagged_fields();
            std::cout << "valid: " << catalog.tools.size() << " tools, digest "
                      << catalog.digest() << "\n";
            if (!flagged.empty()) {
                std::cout << flagged.size() << " field(s) flagged for enrichment\n";
            }
        } else if (enrich_cmd->parsed()) {
            const ToolCatalog catalog = load_catalog(catalog_path, LoadMode::Lenient);
            auto backend = make_chat_backend(enrich_backend.settings());
            EnrichOptions options;
            options.model = enrich_backend.model;
            const ToolCatalog enriched = enrich_catalog(catalog, *backend);
            save_catalog(enriched, enrich_out);
            std::cout << "enriched " << catalog.flagged_fields().size() << " field(s) -> "
                      << enrich_out << "\n";
        } else if (embed_cmd->parsed()) {
            const ToolCatalog catalog = load_catalog(embed_catalog_path, LoadMode::Lenient);
            auto provider = make_embedding_provider(embed_provider.settings());
            const EmbeddingStore store =
                embed_catalog(catalog, *provider, embed_provider.cache);
            std::cout << "embedded " << store.entry_count() << " fields ("
                      << store.unique_text_count() << " unique texts, "
                      << provider->call_count() << " provider calls)\n";
        } else if (graph_build_cmd->parsed()) {
            const ToolCatalog catalog = load_catalog(gb_catalog, LoadMode::Lenient);
            const ToolGraph graph =
                obtain_graph("", catalog, gb_provider, gb_tau, gb_no_pp, gb_no_pr);
            save_graph(graph, gb_out);
            std::cout << "graph: " << graph.n_nodes << " nodes, " << graph.edges.size()
                      << " edges -> " << gb_out << "\n";
        } else if (graph_sample_cmd->parsed()) {
            const ToolGraph graph = load_graph(gs_graph);
            const auto nodes = sample_subset(graph, gs_n, gs_seed);
            json out{{"nodes", nodes}};
            if (!gs_catalog.empty()) {
                const ToolCatalog catalog = load_catalog(gs_catalog, LoadMode::Lenient);
                std::vector<std::string> names;
                for (int node : nodes) names.push_back(catalog.tools.at(node).name);
                out["tools"] = names;
            }
            std::cout << out.dump() << "\n";
        } else if (plan_cmd->parsed()) {
            const ToolCatalog catalog = load_catalog(plan_catalog, LoadMode::Lenient);
            const ToolGraph graph = obtain_graph(plan_graph, catalog, plan_provider, plan_tau,
                                                 false, false);
            const auto nodes = sample_subset(graph, plan_n, derive_seed(plan_seed, 10));
            std::vector<ToolSpec> subset;
            for (int node : nodes) subset.push_back(catalog.tools.at(node));
            auto backend = make_chat_backend(plan_backend.settings());
            PlannerConfig planner_config;
            planner_config.params.seed = derive_seed(plan_seed, 30);
            planner_config.params.model = plan_backend.model;
            const DialoguePlan plan = generate_plan(subset, *backend, planner_config);
            std::cout << plan.to_json().dump(2) << "\n";
        } else if (syn_cmd->parsed()) {
            PipelineConfig config = syn_config.empty() ? PipelineConfig{}
                                                       : PipelineConfig::from_file(syn_config);
            if (!syn_catalog.empty()) config.catalog_path = syn_catalog;
            if (!syn_graph.empty()) config.graph.file = syn_graph;
            config.count = syn_count;
            config.subset_size = syn_n;
            config.seed = syn_seed;
            config.workers = syn_workers;
            if (syn_no_graph) config.graph_sampling = false;
            if (syn_no_plan) config.plan.enabled = false;
            if (syn_cmd->count("--backend") || syn_config.empty()) {
                config.backends = syn_backend.settings();
            }
            if (syn_cmd->count("--provider") || syn_config.empty()) {
                config.embedding = syn_provider.settings();
            }
            synthesize_corpus(config, syn_out);
            std::cout << "synthesized " << config.count << " dialogues -> " << syn_out << "\n";
        } else if (filter_cmd->parsed()) {
            FilterRules rules;
            for (const auto& rule : filter_disable) rules.disable(rule);
            const FilterReport report = filter_jsonl(filter_in, filter_out, rules);
            std::cout << "kept " << report.kept << ", dropped " << report.dropped << " -> "
                      << filter_out << "\n";
            if (!filter_report_path.empty()) {
                write_report(filter_report_path, report.to_json());
            }
        } else if (eval_pearson->parsed()) {
            const json doc = json::parse(read_text_file(eval_pearson_in));
            const double r = pearson(doc.at("x").get<std::vector<double>>(),
                                     doc.at("y").get<std::vector<double>>());
            write_report(eval_report, json{{"pearson_r", r}});
        } else if (eval_cmd->parsed()) {
            const std::vector<Dialogue> dialogues = load_dialogues_jsonl(eval_in);
            const TextScope scope =
                eval_scope == "full" ? TextScope::Full : TextScope::NaturalOnly;
            if (eval_stats->parsed()) {
                const CorpusStats stats = corpus_stats(dialogues);
                write_report(eval_report, json{{"n_tokens", stats.n_tokens},
                                               {"n_calls", stats.n_calls},
                                               {"n_call_turns", stats.n_call_turns}});
            } else if (eval_entropy->parsed()) {
                write_report(eval_report, json{{"entropy_H", shannon_entropy(dialogues, scope)}});
            } else if (eval_distinct->parsed()) {
                write_report(eval_report,
                             json{{"distinct", distinct_n(dialogues, eval_ngram, scope)},
                                  {"n", eval_ngram}});
            } else if (eval_coherence->parsed()) {
                auto provider = make_embedding_provider(eval_provider.settings());
                NliSettings nli_settings;
                nli_settings.kind = eval_nli;
                nli_settings.endpoint = eval_nli_endpoint;
                auto nli = make_nli_classifier(nli_settings);
                write_report(eval_report, json{{"ss_mean", coherence_ss(dialogues, *provider)},
                                               {"enr_ratio", coherence_enr(dialogues, *nli)}});
            } else if (eval_rubric->parsed()) {
                auto backend = make_chat_backend(eval_backend.settings());
                RubricConfig rubric_config;
                rubric_config.params.model = eval_backend.model;
                const int sample = std::min<int>(eval_sample, static_cast<int>(dialogues.size()));
                const RubricReport report =
                    rubric_eval(dialogues, *backend, sample, eval_seed, rubric_config);
                write_report(eval_report, report.to_json());
            }
        } else if (overlap_ngram_cmd->parsed()) {
            const auto streams = training_streams_from_jsonl(ov_train);
            const ToolCatalog test = load_catalog(ov_test, LoadMode::Lenient);
            const OverlapReport report =
                ngram_overlap(streams, test, ov_min_len, ov_tool_threshold);
            write_report(ov_report, report.to_json());
        } else if (overlap_sim_cmd->parsed()) {
            const ToolCatalog train = load_catalog(ov_train, LoadMode::Lenient);
            const ToolCatalog test = load_catalog(ov_test, LoadMode::Lenient);
            auto provider = make_embedding_provider(ov_provider.settings());
            const OverlapReport report =
                similarity_overlap(train, test, *provider, ov_sim_threshold);
            write_report(ov_report, report.to_json());
        } else if (run_cmd->parsed() || ablate_cmd->parsed()) {
            PipelineConfig config = PipelineConfig::from_file(run_config_path);
            if (!run_out_dir.empty()) config.out_dir = run_out_dir;
            if (run_seed) config.seed = *run_seed;
            if (run_count) config.count = *run_count;
            if (run_workers) config.workers = *run_workers;
            if (ablate_cmd->parsed()) {
                config.graph_sampling = ablate_graph == "on";
                config.plan.enabled = ablate_plan == "on";
            }
            const RunManifest manifest = run_pipeline(config);
            std::cout << "run complete: " << manifest.kept << " kept / " << manifest.attempts
                      << " attempts -> " << config.out_dir << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const AttemptCapError& e) {
        std::cerr << "attempt cap: " << e.what() << "\n";
        return kExitAttemptCap;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitOk;
}
