#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace isochk {

// Incremental cycle detection maintaining a dynamic pseudo-topological order
// (Pearce-Kelly). Inserting an edge that already agrees with the order is
// O(1); otherwise a bounded two-way search of the affected region either
// finds a cycle or reorders the visited vertices. Edges are removed strictly
// LIFO, which keeps the order valid for the remaining graph.
class PkGraph {
  public:
    struct EdgeRec {
        int from;
        int to;
        std::uint32_t tag;  // caller-owned edge metadata id
    };

    struct InsertResult {
        bool cycle = false;
        // On cycle: edge ids of an existing path to ~> from (empty for a
        // self-loop); the rejected edge is not inserted.
        std::vector<int> path;
    };

    std::int64_t pk_calls = 0;
    std::int64_t traversals = 0;
    std::int64_t cycles = 0;
    std::int64_t reorders = 0;

    void reset(int n, const std::vector<int>* topo = nullptr) {
        n_ = n;
        edges_.clear();
        out_.assign(n, {});
        in_.assign(n, {});
        ord_.resize(n);
        if (topo) {
            for (int i = 0; i < n; ++i) ord_[(*topo)[i]] = i;
        } else {
            for (int i = 0; i < n; ++i) ord_[i] = i;
        }
        mark_.assign(n, 0);
        epoch_ = 0;
        parent_edge_.assign(n, -1);
        pk_calls = traversals = cycles = reorders = 0;
    }

    int ord(int v) const { return ord_[v]; }
    std::size_t edge_count() const { return edges_.size(); }
    const EdgeRec& edge(int id) const { return edges_[std::size_t(id)]; }
    const std::vector<int>& out_edges(int v) const { return out_[v]; }
    const std::vector<int>& in_edges(int v) const { return in_[v]; }

    InsertResult insert(int from, int to, std::uint32_t tag) {
        ++pk_calls;
        if (ord_[from] < ord_[to]) {
            push_edge(from, to, tag);
            return {};
        }
        ++traversals;
        // Forward from `to`, bounded by ord <= ord[from]. Reaching `from`
        // closes a cycle; ord strictly increases along existing edges, so the
        // bound loses nothing.
        int lo = ord_[to], hi = ord_[from];
        ++epoch_;
        delta_f_.clear();
        stack_.clear();
        stack_.push_back(to);
        mark_[to] = epoch_;
        parent_edge_[to] = -1;
        bool found = (to == from);
        while (!stack_.empty() && !found) {
            int u = stack_.back();
            stack_.pop_back();
            delta_f_.push_back(u);
            for (int eid : out_[u]) {
                int w = edges_[std::size_t(eid)].to;
                if (ord_[w] > hi || mark_[w] == epoch_) continue;
                mark_[w] = epoch_;
                parent_edge_[w] = eid;
                if (w == from) {
                    found = true;
                    break;
                }
                stack_.push_back(w);
            }
        }
        if (found) {
            ++cycles;
            InsertResult r;
            r.cycle = true;
            for (int e = parent_edge_[from]; e != -1;
                 e = parent_edge_[edges_[std::size_t(e)].from])
                r.path.push_back(e);
            std::reverse(r.path.begin(), r.path.end());
            return r;
        }
        // Backward from `from`, bounded by ord >= ord[to].
        ++epoch_;
        delta_b_.clear();
        stack_.clear();
        stack_.push_back(from);
        mark_[from] = epoch_;
        while (!stack_.empty()) {
            int u = stack_.back();
            stack_.pop_back();
            delta_b_.push_back(u);
            for (int eid : in_[u]) {
                int w = edges_[std::size_t(eid)].from;
                if (ord_[w] < lo || mark_[w] == epoch_) continue;
                mark_[w] = epoch_;
                stack_.push_back(w);
            }
        }
        reorder();
        push_edge(from, to, tag);
        return {};
    }

    // Removes the `count` most recently inserted edges.
    void pop_edges(std::size_t count) {
        while (count-- > 0) {
            const EdgeRec& e = edges_.back();
            out_[e.from].pop_back();
            in_[e.to].pop_back();
            edges_.pop_back();
        }
    }

  private:
    void push_edge(int from, int to, std::uint32_t tag) {
        auto id = static_cast<int>(edges_.size());
        edges_.push_back({from, to, tag});
        out_[from].push_back(id);
        in_[to].push_back(id);
    }

    void reorder() {
        ++reorders;
        auto by_ord = [&](int a, int b) { return ord_[a] < ord_[b]; };
        std::sort(delta_b_.begin(), delta_b_.end(), by_ord);
        std::sort(delta_f_.begin(), delta_f_.end(), by_ord);
        pool_.clear();
        for (int v : delta_b_) pool_.push_back(ord_[v]);
        for (int v : delta_f_) pool_.push_back(ord_[v]);
        std::sort(pool_.begin(), pool_.end());
        std::size_t k = 0;
        for (int v : delta_b_) ord_[v] = pool_[k++];
        for (int v : delta_f_) ord_[v] = pool_[k++];
    }

    int n_ = 0;
    std::vector<EdgeRec> edges_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<int> ord_;
    std::vector<int> mark_;
    int epoch_ = 0;
    std::vector<int> parent_edge_;
    std::vector<int> stack_, delta_f_, delta_b_, pool_;
};

}  // namespace isochk
