#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "toolflow/common.hpp"
#include "toolflow/data_filter.hpp"
#include "toolflow/embedding.hpp"
#include "toolflow/overlap.hpp"
#include "toolflow/pipeline.hpp"
#include "toolflow/quality_eval.hpp"
#include "toolflow/tokenize.hpp"
#include "toolflow/tool_catalog.hpp"
#include "toolflow/tool_graph.hpp"

namespace py = pybind11;
using namespace toolflow;

namespace {

py::object json_to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null:
            return py::none();
        case json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case json::value_t::number_integer:
            return py::int_(j.get<long long>());
        case json::value_t::number_unsigned:
            return py::int_(j.get<unsigned long long>());
        case json::value_t::number_float:
            return py::float_(j.get<double>());
        case json::value_t::string:
            return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items()) {
                out[py::str(key)] = json_to_py(value);
            }
            return out;
        }
        default:
            return py::none();
    }
}

TextScope scope_from_string(const std::string& scope) {
    if (scope == "natural") return TextScope::NaturalOnly;
    if (scope == "full") return TextScope::Full;
    throw ConfigError("scope must be 'natural' or 'full'");
}

}  // namespace

PYBIND11_MODULE(_toolflow, m) {
    m.doc() = "Tool-calling dialogue synthesis pipeline (C++ core)";
    m.attr("__version__") = kPipelineVersion;

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<AttemptCapError>(m, "AttemptCapError");
    py::register_exception<Error>(m, "ToolflowError");

    m.def("tokenize", [](const std::string& text) { return tokenize(text); },
          py::arg("text"), "Standard word tokenizer shared by all metrics");

    m.def("cosine", &cosine, py::arg("a"), py::arg("b"));

    m.def(
        "mock_embed",
        [](const std::vector<std::string>& texts) {
            HashEmbeddingProvider provider;
            return provider.embed(texts);
        },
        py::arg("texts"), "Deterministic 64-dim bag-of-tokens embeddings");

    m.def(
        "validate_catalog",
        [](const std::string& path, bool lenient) {
            const ToolCatalog catalog =
                load_catalog(path, lenient ? LoadMode::Lenient : LoadMode::Strict);
            json flagged = json::array();
            for (const auto& f : catalog.flagged_fields()) {
                flagged.push_back(json{{"tool", f.tool_name}, {"field", f.field_name}});
            }
            return json_to_py(json{{"tools", catalog.tools.size()},
                                   {"digest", catalog.digest()},
                                   {"flagged", flagged}});
        },
        py::arg("path"), py::arg("lenient") = false);

    m.def(
        "normalize_catalog",
        [](const std::string& in_path, const std::string& out_path, bool lenient) {
            save_catalog(load_catalog(in_path, lenient ? LoadMode::Lenient : LoadMode::Strict),
                         out_path);
        },
        py::arg("in_path"), py::arg("out_path"), py::arg("lenient") = false,
        "Rewrite a catalog in canonical serialization");

    m.def(
        "build_graph",
        [](const std::string& catalog_path, const std::string& out_path,
           const std::string& cache, double tau, bool include_pp, bool include_pr) {
            const ToolCatalog catalog = load_catalog(catalog_path, LoadMode::Lenient);
            HashEmbeddingProvider provider;
            const EmbeddingStore store = embed_catalog(catalog, provider, cache);
            const ToolGraph graph =
                build_graph(catalog, store, GraphConfig{tau, include_pp, include_pr});
            if (!out_path.empty()) save_graph(graph, out_path);
            return json_to_py(json{{"nodes", graph.n_nodes}, {"edges", graph.edges.size()}});
        },
        py::arg("catalog_path"), py::arg("out_path") = "", py::arg("cache") = "",
        py::arg("tau") = 0.82, py::arg("include_pp") = true, py::arg("include_pr") = true,
        "Build the tool graph with mock embeddings and optionally save it");

    m.def(
        "sample_subset",
        [](const std::string& graph_path, int n, std::uint64_t seed) {
            return sample_subset(load_graph(graph_path), n, seed);
        },
        py::arg("graph_path"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "corpus_stats",
        [](const std::string& jsonl_path) {
            const CorpusStats stats = corpus_stats(load_dialogues_jsonl(jsonl_path));
            return json_to_py(json{{"n_tokens", stats.n_tokens},
                                   {"n_calls", stats.n_calls},
                                   {"n_call_turns", stats.n_call_turns}});
        },
        py::arg("jsonl_path"));

    m.def(
        "shannon_entropy",
        [](const std::string& jsonl_path, const std::string& scope) {
            return shannon_entropy(load_dialogues_jsonl(jsonl_path), scope_from_string(scope));
        },
        py::arg("jsonl_path"), py::arg("scope") = "natural");

    m.def(
        "distinct_n",
        [](const std::string& jsonl_path, int n, const std::string& scope) {
            return distinct_n(load_dialogues_jsonl(jsonl_path), n, scope_from_string(scope));
        },
        py::arg("jsonl_path"), py::arg("n") = 3, py::arg("scope") = "natural");

    m.def(
        "coherence",
        [](const std::string& jsonl_path, double entail_threshold,
           double contradiction_threshold) {
            const auto dialogues = load_dialogues_jsonl(jsonl_path);
            HashEmbeddingProvider provider;
            LexicalOverlapNli nli(entail_threshold, contradiction_threshold);
            return json_to_py(json{{"ss_mean", coherence_ss(dialogues, provider)},
                                   {"enr_ratio", coherence_enr(dialogues, nli)}});
        },
        py::arg("jsonl_path"), py::arg("entail_threshold") = 0.35,
        py::arg("contradiction_threshold") = 0.05,
        "Turn-pair coherence under the offline mock providers");

    m.def("pearson", &pearson, py::arg("x"), py::arg("y"));

    m.def(
        "filter_jsonl",
        [](const std::string& in_path, const std::string& out_path,
           const std::vector<std::string>& disable) {
            FilterRules rules;
            for (const auto& rule : disable) rules.disable(rule);
            return json_to_py(filter_jsonl(in_path, out_path, rules).to_json());
        },
        py::arg("in_path"), py::arg("out_path"),
        py::arg("disable") = std::vector<std::string>{});

    m.def(
        "ngram_overlap",
        [](const std::string& train_jsonl, const std::string& test_catalog, int min_len,
           double tool_threshold) {
            const auto streams = training_streams_from_jsonl(train_jsonl);
            const ToolCatalog test = load_catalog(test_catalog, LoadMode::Lenient);
            return json_to_py(ngram_overlap(streams, test, min_len, tool_threshold).to_json());
        },
        py::arg("train_jsonl"), py::arg("test_catalog"), py::arg("min_len") = 11,
        py::arg("tool_threshold") = 0.10);

    m.def(
        "similarity_overlap",
        [](const std::string& train_catalog, const std::string& test_catalog,
           double sim_threshold) {
            const ToolCatalog train = load_catalog(train_catalog, LoadMode::Lenient);
            const ToolCatalog test = load_catalog(test_catalog, LoadMode::Lenient);
            HashEmbeddingProvider provider;
            return json_to_py(similarity_overlap(train, test, provider, sim_threshold).to_json());
        },
        py::arg("train_catalog"), py::arg("test_catalog"), py::arg("sim_threshold") = 0.9);

    m.def(
        "run_pipeline",
        [](const std::string& config_json) {
            const PipelineConfig config = PipelineConfig::from_json(json::parse(config_json));
            return json_to_py(run_pipeline(config).to_json());
        },
        py::arg("config_json"), "Run the full pipeline from a config JSON string");

    m.def(
        "run_pipeline_file",
        [](const std::string& config_path) {
            return json_to_py(run_pipeline(PipelineConfig::from_file(config_path)).to_json());
        },
        py::arg("config_path"));

    m.def(
        "synthesize_corpus",
        [](const std::string& config_json, const std::string& out_path) {
            synthesize_corpus(PipelineConfig::from_json(json::parse(config_json)), out_path);
        },
        py::arg("config_json"), py::arg("out_path"),
        "Synthesis stage alone: raw dialogues, no filtering");
}
