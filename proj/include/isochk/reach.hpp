#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace isochk {

// Packed n x n boolean reachability matrix, one bit row per vertex.
class BitMatrix {
  public:
    BitMatrix() = default;
    explicit BitMatrix(int n) : n_(n), words_((n + 63) / 64), bits_(std::size_t(n) * words_, 0) {}

    int size() const { return n_; }
    bool test(int i, int j) const {
        return (bits_[std::size_t(i) * words_ + (j >> 6)] >> (j & 63)) & 1;
    }
    void set(int i, int j) { bits_[std::size_t(i) * words_ + (j >> 6)] |= 1ULL << (j & 63); }
    void or_row(int dst, int src) {
        std::uint64_t* d = &bits_[std::size_t(dst) * words_];
        const std::uint64_t* s = &bits_[std::size_t(src) * words_];
        for (int w = 0; w < words_; ++w) d[w] |= s[w];
    }

  private:
    int n_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Kahn topological sort over an adjacency list of plain (from -> to) pairs.
// Returns nullopt when the graph is cyclic. Self-loops count as cycles.
inline std::optional<std::vector<int>> topo_order(int n,
                                                  const std::vector<std::vector<int>>& adj) {
    std::vector<int> indeg(n, 0);
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) ++indeg[v];
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> queue;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) queue.push_back(v);
    while (!queue.empty()) {
        int u = queue.back();
        queue.pop_back();
        order.push_back(u);
        for (int v : adj[u])
            if (--indeg[v] == 0) queue.push_back(v);
    }
    if (static_cast<int>(order.size()) != n) return std::nullopt;
    return order;
}

// Extracts one cycle (as a vertex sequence v0 -> v1 -> ... -> v0) from a graph
// known to be cyclic. Used only for violation witnesses.
inline std::vector<int> find_cycle(int n, const std::vector<std::vector<int>>& adj) {
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> parent(n, -1);
    for (int s = 0; s < n; ++s) {
        if (state[s]) continue;
        std::vector<std::pair<int, std::size_t>> stack{{s, 0}};
        state[s] = 1;
        while (!stack.empty()) {
            auto& [u, i] = stack.back();
            if (i < adj[u].size()) {
                int v = adj[u][i++];
                if (v == u) return {u, u};
                if (state[v] == 1) {
                    std::vector<int> cyc{v};
                    for (int w = u; w != v; w = parent[w]) cyc.push_back(w);
                    cyc.push_back(v);
                    std::reverse(cyc.begin() + 1, cyc.end() - 1);
                    return cyc;
                }
                if (state[v] == 0) {
                    state[v] = 1;
                    parent[v] = u;
                    stack.push_back({v, 0});
                }
            } else {
                state[u] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

// Reflexive-transitive closure by dynamic programming in reverse topological
// order: each vertex unions the rows of its successors. Returns nullopt when
// the graph is cyclic.
inline std::optional<BitMatrix> reachability(int n, const std::vector<std::vector<int>>& adj) {
    auto order = topo_order(n, adj);
    if (!order) return std::nullopt;
    BitMatrix r(n);
    for (auto it = order->rbegin(); it != order->rend(); ++it) {
        int u = *it;
        r.set(u, u);
        for (int v : adj[u]) r.or_row(u, v);
    }
    return r;
}

// Shortest path u -> v over an adjacency list; empty when unreachable or u==v
// requires a real cycle through an edge. Used for witness paths.
inline std::vector<int> bfs_path(int n, const std::vector<std::vector<int>>& adj, int from,
                                 int to) {
    std::vector<int> parent(n, -2);
    std::vector<int> queue{from};
    parent[from] = -1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int u = queue[qi];
        if (u == to && qi > 0) break;
        for (int v : adj[u]) {
            if (parent[v] != -2) continue;
            parent[v] = u;
            queue.push_back(v);
        }
    }
    if (parent[to] == -2) return {};
    std::vector<int> path{to};
    for (int w = parent[to]; w != -1 && w != -2; w = parent[w]) path.push_back(w);
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace isochk
