#pragma once

// Road-network graph representation and the spectral graph-convolution
// primitive: the symmetric-normalized self-loop propagation operator
// D~^{-1/2} (A + I) D~^{-1/2} and the layer  act(P H W).

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"

#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kstgcn {

struct RoadGraph {
    int n_nodes = 0;
    std::vector<std::string> node_ids;  // external section identifiers
    Mat adjacency;                      // n x n, binary, symmetric, zero diagonal

    std::vector<int> neighbors(int v) const {
        std::vector<int> out;
        for (int u = 0; u < n_nodes; ++u)
            if (adjacency(v, u) != 0.0) out.push_back(u);
        return out;
    }
};

struct PropagationMatrix {
    Mat p;  // n x n, symmetric, spectral radius <= 1
    int size() const { return static_cast<int>(p.rows()); }
};

inline std::string default_node_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%04d", index);
    return buf;
}

// Symmetric binary adjacency with 1 exactly at the listed pairs (both orders).
// Duplicate edges are accepted idempotently; self-pairs and out-of-range ids
// are input errors.
inline RoadGraph build_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                             std::vector<std::string> node_ids = {}) {
    require(n_nodes > 0, "build_graph: n_nodes must be positive");
    RoadGraph g;
    g.n_nodes = n_nodes;
    if (node_ids.empty()) {
        g.node_ids.reserve(n_nodes);
        for (int i = 0; i < n_nodes; ++i) g.node_ids.push_back(default_node_id(i));
    } else {
        require(static_cast<int>(node_ids.size()) == n_nodes,
                "build_graph: node_ids size does not match n_nodes");
        g.node_ids = std::move(node_ids);
    }
    g.adjacency = Mat::Zero(n_nodes, n_nodes);
    for (const auto& [a, b] : edges) {
        require(a >= 0 && a < n_nodes && b >= 0 && b < n_nodes,
                "build_graph: edge endpoint out of range");
        require(a != b, "build_graph: self-loop edge not allowed");
        g.adjacency(a, b) = 1.0;
        g.adjacency(b, a) = 1.0;
    }
    return g;
}

// D~^{-1/2} (A + I) D~^{-1/2}. Degrees are >= 1 because of the self-loops,
// so the normalization never divides by zero.
inline PropagationMatrix propagation_matrix(const RoadGraph& g) {
    const int n = g.n_nodes;
    Mat a_tilde = g.adjacency + Mat::Identity(n, n);
    Vec inv_sqrt_deg(n);
    for (int i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(a_tilde.row(i).sum());
    PropagationMatrix p;
    p.p = inv_sqrt_deg.asDiagonal() * a_tilde * inv_sqrt_deg.asDiagonal();
    return p;
}

// One spectral convolution layer: act(P H W).
inline Mat gcn_layer(const PropagationMatrix& p, const Mat& h, const Mat& w, Activation act) {
    require(p.p.cols() == h.rows(), "gcn_layer: propagation/feature row mismatch");
    require(h.cols() == w.rows(), "gcn_layer: feature/weight shape mismatch");
    return apply_activation(p.p * h * w, act);
}

// Pairs of nodes at shortest-path distance exactly 2 (used for the optional
// second-hop relation in the knowledge graph).
inline std::vector<std::pair<int, int>> distance_two_pairs(const RoadGraph& g) {
    std::vector<std::pair<int, int>> out;
    const int n = g.n_nodes;
    for (int s = 0; s < n; ++s) {
        std::vector<int> dist(n, -1);
        std::queue<int> q;
        dist[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            if (dist[v] >= 2) continue;
            for (int u = 0; u < n; ++u) {
                if (g.adjacency(v, u) != 0.0 && dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    q.push(u);
                }
            }
        }
        for (int t = s + 1; t < n; ++t)
            if (dist[t] == 2) out.emplace_back(s, t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adjacency ingest/export: edge list `src,dst` plus a `node_id,index` sidecar.
// ---------------------------------------------------------------------------

inline void save_graph(const RoadGraph& g, const std::string& edges_path,
                       const std::string& nodemap_path) {
    csv::Writer edges(edges_path);
    edges.row({"src", "dst"});
    for (int i = 0; i < g.n_nodes; ++i)
        for (int j = i + 1; j < g.n_nodes; ++j)
            if (g.adjacency(i, j) != 0.0) edges.row({g.node_ids[i], g.node_ids[j]});
    csv::Writer nodes(nodemap_path);
    nodes.row({"node_id", "index"});
    for (int i = 0; i < g.n_nodes; ++i) nodes.row({g.node_ids[i], std::to_string(i)});
}

inline RoadGraph load_graph(const std::string& edges_path, const std::string& nodemap_path) {
    csv::Table nodes = csv::read_file(nodemap_path);
    std::vector<std::string> ids;
    for (size_t r = 0; r < nodes.rows.size(); ++r) {
        const auto& row = nodes.rows[r];
        if (row.size() != 2)
            throw std::runtime_error(nodemap_path + " line " +
                                     std::to_string(nodes.line_numbers[r]) + ": expected 2 fields");
        long idx = csv::parse_long(row[1], nodemap_path);
        if (idx != static_cast<long>(ids.size()))
            throw std::runtime_error(nodemap_path + " line " +
                                     std::to_string(nodes.line_numbers[r]) +
                                     ": indices must be contiguous from 0");
        ids.push_back(row[0]);
    }
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);

    csv::Table edges = csv::read_file(edges_path);
    std::vector<std::pair<int, int>> pairs;
    for (size_t r = 0; r < edges.rows.size(); ++r) {
        const auto& row = edges.rows[r];
        const std::string where =
            edges_path + " line " + std::to_string(edges.line_numbers[r]);
        if (row.size() != 2) throw std::runtime_error(where + ": expected 2 fields");
        auto a = index.find(row[0]);
        auto b = index.find(row[1]);
        if (a == index.end() || b == index.end())
            throw std::runtime_error(where + ": unknown node id");
        pairs.emplace_back(a->second, b->second);
    }
    const int n = static_cast<int>(ids.size());
    return build_graph(n, pairs, std::move(ids));
}

}  // namespace kstgcn
