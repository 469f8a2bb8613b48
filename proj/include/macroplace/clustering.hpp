#pragma once

// Standard-cell clustering by greedy heavy-edge coarsening, and the
// hyperedge-to-graph expansion consumed by the policy network.

#include "macroplace/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <unordered_map>
#include <vector>

namespace macroplace {

struct Cluster {
    std::vector<int> members;  // base node ids, ascending
    double area = 0.0;
    double side = 0.0;  // side of the equal-area square

    friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Clusters of a base netlist plus the reduced netlist over
/// {macros, terminals, clusters}. Reduced node ids: macros and terminals
/// first (base order), then one node per cluster.
struct ClusteredNetlist {
    std::shared_ptr<const Netlist> base;
    std::vector<Cluster> clusters;
    /// Per base node: its cluster index, or -1 for macros and terminals.
    std::vector<int> cluster_of;
    Netlist reduced;
    std::vector<int> reduced_of_base;  // -1 for std cells
    std::vector<int> base_of_reduced;  // -1 for cluster nodes
    int first_cluster = 0;

    int cluster_node(int cluster) const { return first_cluster + cluster; }
    bool is_cluster_node(int reduced_id) const { return reduced_id >= first_cluster; }
};

/// Cluster count used when none is configured.
inline int default_cluster_count(std::size_t macro_count) {
    return static_cast<int>(std::min<std::size_t>(512, std::max<std::size_t>(16, 4 * macro_count)));
}

namespace detail {

// Nets with more std-cell pins than this are ignored when measuring
// connectivity (their clique would dominate the cost).
inline constexpr std::size_t kMaxCoarsenNetDegree = 100;

inline std::vector<int> distinct_nodes(const Net& net) {
    std::vector<int> v;
    v.reserve(net.pins.size());
    for (const auto& p : net.pins) v.push_back(p.node);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

/// Merges std cells into at most `k` clusters. Repeatedly merges the pair of
/// groups with the highest connectivity / (area_a * area_b) (ties: lowest ids);
/// once no connected pair remains, merges the two smallest groups. The merge
/// sequence does not depend on k, so a smaller k continues a larger one.
inline ClusteredNetlist cluster_std_cells(std::shared_ptr<const Netlist> base, int k) {
    if (k <= 0) throw ArgumentError("cluster_std_cells: k must be positive");
    if (!base) throw ArgumentError("cluster_std_cells: null netlist");
    const Netlist& nl = *base;
    const int n = static_cast<int>(nl.nodes.size());

    std::vector<char> alive(static_cast<std::size_t>(n), 0);
    std::vector<double> area(static_cast<std::size_t>(n), 0.0);
    std::vector<unsigned> version(static_cast<std::size_t>(n), 0);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    int groups = 0;
    for (const auto& node : nl.nodes) {
        if (node.kind != NodeKind::std_cell) continue;
        alive[static_cast<std::size_t>(node.id)] = 1;
        area[static_cast<std::size_t>(node.id)] = node.area();
        parent[static_cast<std::size_t>(node.id)] = node.id;
        ++groups;
    }

    std::vector<std::unordered_map<int, double>> adj(static_cast<std::size_t>(n));
    for (const auto& net : nl.nets) {
        const auto nodes = detail::distinct_nodes(net);
        if (nodes.size() < 2) continue;
        std::vector<int> cells;
        for (int v : nodes)
            if (nl.nodes[static_cast<std::size_t>(v)].kind == NodeKind::std_cell) cells.push_back(v);
        if (cells.size() < 2 || cells.size() > detail::kMaxCoarsenNetDegree) continue;
        const double w = net.weight / static_cast<double>(nodes.size() - 1);
        for (std::size_t i = 0; i < cells.size(); ++i)
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                adj[static_cast<std::size_t>(cells[i])][cells[j]] += w;
                adj[static_cast<std::size_t>(cells[j])][cells[i]] += w;
            }
    }

    struct Entry {
        double score;
        int a, b;  // a < b
        unsigned va, vb;
    };
    auto worse = [](const Entry& x, const Entry& y) {
        if (x.score != y.score) return x.score < y.score;
        if (x.a != y.a) return x.a > y.a;
        return x.b > y.b;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> pq(worse);
    auto push = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        const double conn = adj[static_cast<std::size_t>(a)].at(b);
        pq.push({conn / (area[static_cast<std::size_t>(a)] * area[static_cast<std::size_t>(b)]), a, b, version[static_cast<std::size_t>(a)],
                 version[static_cast<std::size_t>(b)]});
    };
    for (int a = 0; a < n; ++a)
        for (const auto& [b, w] : adj[static_cast<std::size_t>(a)])
            if (a < b) push(a, b);

    auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
        return v;
    };
    auto merge = [&](int a, int b) {  // a < b, a survives
        parent[static_cast<std::size_t>(b)] = a;
        alive[static_cast<std::size_t>(b)] = 0;
        area[static_cast<std::size_t>(a)] += area[static_cast<std::size_t>(b)];
        ++version[static_cast<std::size_t>(a)];
        auto moved = std::move(adj[static_cast<std::size_t>(b)]);
        adj[static_cast<std::size_t>(b)].clear();
        for (const auto& [c, w] : moved) {
            if (c == a) continue;
            adj[static_cast<std::size_t>(c)].erase(b);
            adj[static_cast<std::size_t>(c)][a] += w;
            adj[static_cast<std::size_t>(a)][c] += w;
        }
        adj[static_cast<std::size_t>(a)].erase(b);
        --groups;
        std::vector<int> nbrs;
        for (const auto& [c, w] : adj[static_cast<std::size_t>(a)]) nbrs.push_back(c);
        std::sort(nbrs.begin(), nbrs.end());
        for (int c : nbrs) push(a, c);
    };

    while (groups > k && !pq.empty()) {
        const Entry e = pq.top();
        pq.pop();
        if (!alive[static_cast<std::size_t>(e.a)] || !alive[static_cast<std::size_t>(e.b)]) continue;
        if (version[static_cast<std::size_t>(e.a)] != e.va || version[static_cast<std::size_t>(e.b)] != e.vb) continue;
        merge(e.a, e.b);
    }
    if (groups > k) {
        std::set<std::pair<double, int>> by_area;
        for (int v = 0; v < n; ++v)
            if (alive[static_cast<std::size_t>(v)]) by_area.insert({area[static_cast<std::size_t>(v)], v});
        while (groups > k) {
            const int x = by_area.begin()->second;
            by_area.erase(by_area.begin());
            const int y = by_area.begin()->second;
            by_area.erase(by_area.begin());
            const int a = std::min(x, y), b = std::max(x, y);
            merge(a, b);
            by_area.insert({area[static_cast<std::size_t>(a)], a});
        }
    }

    ClusteredNetlist out;
    out.base = base;
    out.cluster_of.assign(static_cast<std::size_t>(n), -1);
    std::map<int, int> cluster_index;  // representative -> cluster
    for (int v = 0; v < n; ++v)
        if (nl.nodes[static_cast<std::size_t>(v)].kind == NodeKind::std_cell && find(v) == v) cluster_index.emplace(v, 0);
    int next = 0;
    for (auto& [rep, idx] : cluster_index) idx = next++;
    out.clusters.resize(cluster_index.size());
    for (int v = 0; v < n; ++v) {
        if (nl.nodes[static_cast<std::size_t>(v)].kind != NodeKind::std_cell) continue;
        const int c = cluster_index.at(find(v));
        out.cluster_of[static_cast<std::size_t>(v)] = c;
        out.clusters[static_cast<std::size_t>(c)].members.push_back(v);
        out.clusters[static_cast<std::size_t>(c)].area += nl.nodes[static_cast<std::size_t>(v)].area();
    }
    for (auto& c : out.clusters) c.side = std::sqrt(c.area);

    // Reduced netlist.
    Netlist& r = out.reduced;
    r.canvas_width = nl.canvas_width;
    r.canvas_height = nl.canvas_height;
    r.target_density = nl.target_density;
    out.reduced_of_base.assign(static_cast<std::size_t>(n), -1);
    for (const auto& node : nl.nodes) {
        if (node.kind == NodeKind::std_cell) continue;
        out.reduced_of_base[static_cast<std::size_t>(node.id)] = r.add_node(node.name, node.width, node.height, node.kind, node.movable);
        out.base_of_reduced.push_back(node.id);
    }
    out.first_cluster = static_cast<int>(r.nodes.size());
    for (std::size_t c = 0; c < out.clusters.size(); ++c) {
        const double s = out.clusters[c].side;
        r.add_node("cluster" + std::to_string(c), s, s, NodeKind::std_cell, true);
        out.base_of_reduced.push_back(-1);
    }
    for (const auto& net : nl.nets) {
        std::vector<Pin> pins;
        std::vector<int> seen_clusters;
        bool all_one_cluster = true;
        int first_c = -2;
        for (const auto& pin : net.pins) {
            const int c = out.cluster_of[static_cast<std::size_t>(pin.node)];
            if (c < 0) {
                all_one_cluster = false;
                pins.push_back({out.reduced_of_base[static_cast<std::size_t>(pin.node)], pin.offset_x, pin.offset_y});
                continue;
            }
            if (first_c == -2) first_c = c;
            else if (c != first_c) all_one_cluster = false;
            if (std::find(seen_clusters.begin(), seen_clusters.end(), c) != seen_clusters.end()) continue;
            seen_clusters.push_back(c);
            pins.push_back({out.cluster_node(c), 0.0, 0.0});
        }
        if (all_one_cluster) continue;
        r.add_net(net.name, std::move(pins), net.weight);
    }
    return out;
}

inline ClusteredNetlist cluster_std_cells(const Netlist& base, int k) {
    return cluster_std_cells(std::make_shared<const Netlist>(base), k);
}

/// Reduced placement from a base placement: macros/terminals copied, each
/// cluster at the area-weighted centroid of its (placed) members.
inline Placement reduce_placement(const ClusteredNetlist& cn, const Placement& base_pl) {
    Placement pl(cn.reduced.nodes.size());
    for (std::size_t r = 0; r < cn.base_of_reduced.size(); ++r) {
        const int b = cn.base_of_reduced[r];
        if (b >= 0 && base_pl.is_placed(b)) pl.set(static_cast<int>(r), base_pl.at(b));
    }
    for (std::size_t c = 0; c < cn.clusters.size(); ++c) {
        double sx = 0, sy = 0, sa = 0;
        bool all = true;
        for (int m : cn.clusters[c].members) {
            if (!base_pl.is_placed(m)) {
                all = false;
                break;
            }
            const double a = cn.base->nodes[static_cast<std::size_t>(m)].area();
            sx += a * base_pl.at(m).x;
            sy += a * base_pl.at(m).y;
            sa += a;
        }
        if (all && sa > 0.0) pl.set(cn.cluster_node(static_cast<int>(c)), {sx / sa, sy / sa});
    }
    return pl;
}

/// Base placement from a reduced one: std cells sit on their cluster center.
inline Placement expand_placement(const ClusteredNetlist& cn, const Placement& reduced_pl) {
    Placement pl(cn.base->nodes.size());
    for (std::size_t r = 0; r < cn.base_of_reduced.size(); ++r) {
        const int b = cn.base_of_reduced[r];
        if (b >= 0 && reduced_pl.is_placed(static_cast<int>(r))) pl.set(b, reduced_pl.at(static_cast<int>(r)));
    }
    for (std::size_t v = 0; v < cn.cluster_of.size(); ++v) {
        const int c = cn.cluster_of[v];
        if (c >= 0 && reduced_pl.is_placed(cn.cluster_node(c))) pl.set(static_cast<int>(v), reduced_pl.at(cn.cluster_node(c)));
    }
    return pl;
}

struct Edge {
    int i = 0;
    int j = 0;
    double w = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted undirected graph; edges have i < j, sorted, no parallels.
struct AdjacencyGraph {
    int node_count = 0;
    std::vector<Edge> edges;

    double total_weight() const {
        double s = 0.0;
        for (const auto& e : edges) s += e.w;
        return s;
    }

    /// Per-node neighbor lists (j, w).
    std::vector<std::vector<std::pair<int, double>>> neighbors() const {
        std::vector<std::vector<std::pair<int, double>>> nb(static_cast<std::size_t>(node_count));
        for (const auto& e : edges) {
            nb[static_cast<std::size_t>(e.i)].push_back({e.j, e.w});
            nb[static_cast<std::size_t>(e.j)].push_back({e.i, e.w});
        }
        return nb;
    }
};

enum class NetModel { clique, star };

inline AdjacencyGraph expand_to_graph(const Netlist& nl, NetModel model) {
    const int n = static_cast<int>(nl.nodes.size());
    std::map<std::pair<int, int>, double> acc;
    auto add = [&](int a, int b, double w) {
        if (a == b || !(w > 0.0)) return;
        if (a > b) std::swap(a, b);
        acc[{a, b}] += w;
    };
    std::vector<int> degree;
    if (model == NetModel::star) {
        degree.assign(static_cast<std::size_t>(n), 0);
        for (const auto& net : nl.nets)
            for (int v : detail::distinct_nodes(net)) ++degree[static_cast<std::size_t>(v)];
    }
    for (const auto& net : nl.nets) {
        const auto nodes = detail::distinct_nodes(net);
        const std::size_t p = nodes.size();
        if (p < 2) continue;
        if (model == NetModel::clique) {
            const double w = net.weight / static_cast<double>(p - 1);
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = a + 1; b < p; ++b) add(nodes[a], nodes[b], w);
        } else {
            int hub = nodes.front();
            for (int v : nodes)
                if (degree[static_cast<std::size_t>(v)] > degree[static_cast<std::size_t>(hub)]) hub = v;
            for (int v : nodes) add(hub, v, net.weight);
        }
    }
    AdjacencyGraph g;
    g.node_count = n;
    for (const auto& [key, w] : acc) g.edges.push_back({key.first, key.second, w});
    return g;
}

inline AdjacencyGraph expand_to_graph(const ClusteredNetlist& cn, NetModel model) { return expand_to_graph(cn.reduced, model); }

}  // namespace macroplace
