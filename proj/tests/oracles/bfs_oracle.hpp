#pragma once

// Reference T-score count on a graph whose nodes are 0..N-1 (node id order is
// numeric). Computes BFS depths first, then counts: every node strictly
// shallower than the nearest origin, plus the nodes at that depth whose id is
// below the smallest origin id there, plus the origin itself.

#include <cstddef>
#include <deque>
#include <limits>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline std::size_t bfs_examined(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                const std::set<std::size_t>& sources, const std::set<std::size_t>& origins) {
    constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::size_t> depth(n, kInf);
    std::deque<std::size_t> q;
    for (std::size_t s : sources) {
        depth[s] = 0;
        q.push_back(s);
    }
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop_front();
        for (std::size_t w : adj[u]) {
            if (depth[w] == kInf) {
                depth[w] = depth[u] + 1;
                q.push_back(w);
            }
        }
    }
    std::size_t target_depth = kInf;
    for (std::size_t o : origins) target_depth = std::min(target_depth, depth[o]);
    if (target_depth == kInf) return n;
    std::size_t first_origin = kInf;
    for (std::size_t o : origins)
        if (depth[o] == target_depth) first_origin = std::min(first_origin, o);
    std::size_t count = 1;
    for (std::size_t v = 0; v < n; ++v) {
        if (depth[v] < target_depth || (depth[v] == target_depth && v < first_origin)) ++count;
    }
    return count;
}

}  // namespace oracle
