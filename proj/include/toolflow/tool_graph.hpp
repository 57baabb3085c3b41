#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/embedding.hpp"
#include "toolflow/tool_catalog.hpp"

namespace toolflow {

struct GraphConfig {
    double tau = 0.82;       // similarity threshold, strict >
    bool include_pp = true;  // parameter-parameter rule
    bool include_pr = true;  // return-to-parameter rule
};

// Which rules fired for an undirected edge {i, j} with i < j. The
// return-to-parameter rule is directional, so both directions are recorded.
struct EdgeKinds {
    bool pp = false;
    bool ret_fwd = false;  // a return of node i matched a parameter of node j
    bool ret_rev = false;  // a return of node j matched a parameter of node i

    bool any() const { return pp || ret_fwd || ret_rev; }
};

struct Edge {
    int i = 0;
    int j = 0;  // i < j
    EdgeKinds kinds;
    double max_similarity = 0.0;
};

struct ToolGraph {
    int n_nodes = 0;
    std::vector<Edge> edges;  // sorted by (i, j), deduplicated, no self-loops
    std::vector<std::vector<int>> adjacency;
    GraphConfig config;
    std::string catalog_digest;

    bool has_edge(int a, int b) const;
    int degree(int node) const;

    json to_json() const;
    static ToolGraph from_json(const json& j);
};

// Pairwise brute-force construction: an edge appears when any enabled field
// comparison between two tools exceeds tau. Throws on a missing embedding or
// tau outside (0, 1).
ToolGraph build_graph(const ToolCatalog& catalog, const EmbeddingStore& store,
                      const GraphConfig& config = {});

// Random walk collecting n distinct connected nodes, in visit order. When the
// walk's current node has no unvisited neighbor it jumps uniformly to a
// visited node that still has one; if none exists the walk is exhausted and a
// WalkExhausted error reports the component size reached.
std::vector<int> sample_subset(const ToolGraph& graph, int n, std::uint64_t seed);

void save_graph(const ToolGraph& graph, const std::string& path);
ToolGraph load_graph(const std::string& path);

// Refuses a graph built from a different catalog unless force is set.
ToolGraph load_graph_checked(const std::string& path, const ToolCatalog& catalog,
                             bool force = false);

}  // namespace toolflow
