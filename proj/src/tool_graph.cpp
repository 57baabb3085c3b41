#include "toolflow/tool_graph.hpp"

#include <algorithm>
#include <future>
#include <random>

namespace toolflow {

bool ToolGraph::has_edge(int a, int b) const {
    if (a == b) return false;
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes) return false;
    const auto& nbrs = adjacency[static_cast<std::size_t>(a)];
    return std::find(nbrs.begin(), nbrs.end(), b) != nbrs.end();
}

int ToolGraph::degree(int node) const {
    return static_cast<int>(adjacency[static_cast<std::size_t>(node)].size());
}

namespace {

json kinds_to_json(const EdgeKinds& kinds) {
    json out = json::array();
    if (kinds.pp) out.push_back("pp");
    if (kinds.ret_fwd) out.push_back("ret_i_to_param_j");
    if (kinds.ret_rev) out.push_back("ret_j_to_param_i");
    return out;
}

EdgeKinds kinds_from_json(const json& j) {
    EdgeKinds kinds;
    for (const auto& k : j) {
        const std::string name = k.get<std::string>();
        if (name == "pp") {
            kinds.pp = true;
        } else if (name == "ret_i_to_param_j") {
            kinds.ret_fwd = true;
        } else if (name == "ret_j_to_param_i") {
            kinds.ret_rev = true;
        } else {
            throw GraphError("unknown edge kind: '" + name + "'");
        }
    }
    return kinds;
}

std::vector<std::vector<int>> adjacency_from_edges(int n_nodes, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n_nodes));
    for (const auto& edge : edges) {
        adjacency[static_cast<std::size_t>(edge.i)].push_back(edge.j);
        adjacency[static_cast<std::size_t>(edge.j)].push_back(edge.i);
    }
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
    return adjacency;
}

// All field comparisons between one ordered tool pair. Returns the kinds that
// fired and tracks the running max similarity.
void compare_pair(const ToolSpec& ti, const ToolSpec& tj, const EmbeddingStore& store,
                  const GraphConfig& config, EdgeKinds& kinds, double& max_sim) {
    auto consider = [&](double sim, bool& flag) {
        if (sim > max_sim) max_sim = sim;
        if (sim > config.tau) flag = true;
    };
    if (config.include_pp) {
        for (const auto& pi : ti.parameters) {
            const auto& vi = store.at(EmbeddingFieldKind::Parameter, ti.name, pi.name);
            for (const auto& pj : tj.parameters) {
                const auto& vj = store.at(EmbeddingFieldKind::Parameter, tj.name, pj.name);
                consider(cosine(vi, vj), kinds.pp);
            }
        }
    }
    if (config.include_pr) {
        for (const auto& ri : ti.returns) {
            const auto& vi = store.at(EmbeddingFieldKind::ReturnValue, ti.name, ri.name);
            for (const auto& pj : tj.parameters) {
                const auto& vj = store.at(EmbeddingFieldKind::Parameter, tj.name, pj.name);
                consider(cosine(vi, vj), kinds.ret_fwd);
            }
        }
        for (const auto& rj : tj.returns) {
            const auto& vj = store.at(EmbeddingFieldKind::ReturnValue, tj.name, rj.name);
            for (const auto& pi : ti.parameters) {
                const auto& vi = store.at(EmbeddingFieldKind::Parameter, ti.name, pi.name);
                consider(cosine(vj, vi), kinds.ret_rev);
            }
        }
    }
}

}  // namespace

ToolGraph build_graph(const ToolCatalog& catalog, const EmbeddingStore& store,
                      const GraphConfig& config) {
    if (!(config.tau > 0.0 && config.tau < 1.0)) {
        throw GraphError("tau must lie in (0, 1), got " + std::to_string(config.tau));
    }
    const int n = static_cast<int>(catalog.tools.size());

    // Pair scans are independent; fan out over row blocks and merge in row
    // order so the edge list is always sorted by (i, j).
    const int rows_per_task = 8;
    std::vector<std::future<std::vector<Edge>>> tasks;
    for (int row0 = 0; row0 < n; row0 += rows_per_task) {
        const int row1 = std::min(n, row0 + rows_per_task);
        tasks.push_back(std::async(std::launch::async, [&, row0, row1] {
            std::vector<Edge> local;
            for (int i = row0; i < row1; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    EdgeKinds kinds;
                    double max_sim = 0.0;
                    compare_pair(catalog.tools[static_cast<std::size_t>(i)],
                                 catalog.tools[static_cast<std::size_t>(j)], store, config, kinds,
                                 max_sim);
                    if (kinds.any()) {
                        local.push_back(Edge{i, j, kinds, max_sim});
                    }
                }
            }
            return local;
        }));
    }

    ToolGraph graph;
    graph.n_nodes = n;
    graph.config = config;
    graph.catalog_digest = catalog.digest();
    for (auto& task : tasks) {
        auto local = task.get();
        graph.edges.insert(graph.edges.end(), local.begin(), local.end());
    }
    graph.adjacency = adjacency_from_edges(n, graph.edges);
    return graph;
}

std::vector<int> sample_subset(const ToolGraph& graph, int n, std::uint64_t seed) {
    if (n < 1) throw GraphError("sample size must be >= 1");
    if (n > graph.n_nodes) {
        throw GraphError("sample size " + std::to_string(n) + " exceeds node count " +
                         std::to_string(graph.n_nodes));
    }
    std::mt19937_64 rng(seed);

    if (n == 1) {
        return {static_cast<int>(uniform_index(rng, static_cast<std::size_t>(graph.n_nodes)))};
    }

    // A start with no neighbors can never reach n > 1 nodes.
    std::vector<int> eligible;
    for (int v = 0; v < graph.n_nodes; ++v) {
        if (graph.degree(v) > 0) eligible.push_back(v);
    }
    if (eligible.empty()) {
        throw WalkExhausted("component too small: no node has a neighbor (component size 1)", 1);
    }

    std::vector<int> visited_order;
    std::vector<char> visited(static_cast<std::size_t>(graph.n_nodes), 0);
    auto visit = [&](int v) {
        visited_order.push_back(v);
        visited[static_cast<std::size_t>(v)] = 1;
    };
    visit(eligible[uniform_index(rng, eligible.size())]);

    auto unvisited_neighbors = [&](int v) {
        std::vector<int> out;
        for (int u : graph.adjacency[static_cast<std::size_t>(v)]) {
            if (!visited[static_cast<std::size_t>(u)]) out.push_back(u);
        }
        return out;
    };

    int current = visited_order.back();
    while (static_cast<int>(visited_order.size()) < n) {
        auto candidates = unvisited_neighbors(current);
        if (candidates.empty()) {
            // Dead end: jump to any visited node that still has an unvisited
            // neighbor and continue the walk there.
            std::vector<int> rescue;
            for (int v : visited_order) {
                if (!unvisited_neighbors(v).empty()) rescue.push_back(v);
            }
            if (rescue.empty()) {
                const int reached = static_cast<int>(visited_order.size());
                throw WalkExhausted("component too small: walk exhausted at " +
                                        std::to_string(reached) + " nodes, needed " +
                                        std::to_string(n),
                                    reached);
            }
            current = rescue[uniform_index(rng, rescue.size())];
            candidates = unvisited_neighbors(current);
        }
        const int next = candidates[uniform_index(rng, candidates.size())];
        visit(next);
        current = next;
    }
    return visited_order;
}

json ToolGraph::to_json() const {
    json edge_list = json::array();
    for (const auto& edge : edges) {
        edge_list.push_back(json{{"i", edge.i},
                                 {"j", edge.j},
                                 {"kinds", kinds_to_json(edge.kinds)},
                                 {"max_similarity", edge.max_similarity}});
    }
    return json{{"catalog_digest", catalog_digest},
                {"tau", config.tau},
                {"include_pp", config.include_pp},
                {"include_pr", config.include_pr},
                {"nodes", n_nodes},
                {"edges", edge_list}};
}

ToolGraph ToolGraph::from_json(const json& j) {
    ToolGraph graph;
    graph.catalog_digest = j.at("catalog_digest").get<std::string>();
    graph.config.tau = j.at("tau").get<double>();
    graph.config.include_pp = j.value("include_pp", true);
    graph.config.include_pr = j.value("include_pr", true);
    graph.n_nodes = j.at("nodes").get<int>();
    for (const auto& e : j.at("edges")) {
        Edge edge;
        edge.i = e.at("i").get<int>();
        edge.j = e.at("j").get<int>();
        edge.kinds = kinds_from_json(e.at("kinds"));
        edge.max_similarity = e.at("max_similarity").get<double>();
        if (edge.i >= edge.j || edge.i < 0 || edge.j >= graph.n_nodes || !edge.kinds.any()) {
            throw GraphError("malformed edge record in graph file");
        }
        graph.edges.push_back(edge);
    }
    graph.adjacency = adjacency_from_edges(graph.n_nodes, graph.edges);
    return graph;
}

void save_graph(const ToolGraph& graph, const std::string& path) {
    write_text_file(path, graph.to_json().dump() + "\n");
}

ToolGraph load_graph(const std::string& path) {
    try {
        return ToolGraph::from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw GraphError("malformed graph file " + path + ": " + e.what());
    }
}

ToolGraph load_graph_checked(const std::string& path, const ToolCatalog& catalog, bool force) {
    ToolGraph graph = load_graph(path);
    if (!force && graph.catalog_digest != catalog.digest()) {
        throw GraphError("graph file " + path + " was built from a different catalog (digest " +
                         graph.catalog_digest + " != " + catalog.digest() + ")");
    }
    return graph;
}

}  // namespace toolflow
