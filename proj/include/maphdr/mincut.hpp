#pragma once

#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace maphdr {

// Dinic max-flow on a directed graph with double capacities. After solve(),
// the minimum cut is read off via reachable_from_source(): a node is on the
// source side iff it is reachable in the residual graph.
class MaxFlow {
public:
    explicit MaxFlow(int node_count)
        : adj_(node_count), level_(node_count), it_(node_count) {}

    // Adds u->v with capacity cap and v->u with capacity rev_cap.
    void add_edge(int u, int v, double cap, double rev_cap = 0.0) {
        adj_[u].push_back(static_cast<int>(arcs_.size()));
        arcs_.push_back({v, cap});
        adj_[v].push_back(static_cast<int>(arcs_.size()));
        arcs_.push_back({u, rev_cap});
    }

    double solve(int s, int t) {
        double flow = 0.0;
        while (bfs(s, t)) {
            std::fill(it_.begin(), it_.end(), 0);
            double f;
            while ((f = dfs(s, t, std::numeric_limits<double>::infinity())) >
                   kEps)
                flow += f;
        }
        // Final BFS leaves level_ marking residual reachability from s.
        bfs(s, t);
        return flow;
    }

    bool reachable_from_source(int u) const { return level_[u] >= 0; }

private:
    static constexpr double kEps = 1e-12;

    struct Arc {
        int to;
        double cap;
    };

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<int> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int id : adj_[u]) {
                const Arc& a = arcs_[id];
                if (a.cap > kEps && level_[a.to] < 0) {
                    level_[a.to] = level_[u] + 1;
                    q.push(a.to);
                }
            }
        }
        return level_[t] >= 0;
    }

    double dfs(int u, int t, double pushed) {
        if (u == t) return pushed;
        for (int& i = it_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
            int id = adj_[u][i];
            Arc& a = arcs_[id];
            if (a.cap > kEps && level_[a.to] == level_[u] + 1) {
                double got = dfs(a.to, t, std::min(pushed, a.cap));
                if (got > kEps) {
                    a.cap -= got;
                    arcs_[id ^ 1].cap += got;
                    return got;
                }
            }
        }
        level_[u] = -2; // dead end for this phase
        return 0.0;
    }

    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> level_;
    std::vector<int> it_;
};

} // namespace maphdr
