#pragma once

// Force-directed placement: quadratic (clique-model) wirelength solves
// alternated with bin-based spreading, the spread positions feeding back as
// pseudo-net anchors of growing weight. Stops on the same overflow rule as
// the analytical engine.

#include "macroplace/clustering.hpp"
#include "macroplace/placer/density.hpp"
#include "macroplace/placer/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <numeric>
#include <vector>

namespace macroplace::placer {

namespace detail {

/// One pass of cell shifting along an axis. `pos` holds node centers along
/// the shifted axis, `other` along the cross axis; `util` is the per-bin
/// utilization (bins along the cross axis are the outer index).
inline void shift_axis(std::vector<double>& pos, const std::vector<double>& other, const std::vector<int>& ids, const std::vector<double>& util, int n_cross,
                       int n_along, double size_along, double size_cross, double target, double delta) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_cross));
    for (std::size_t k = 0; k < ids.size(); ++k) members[static_cast<std::size_t>(bin_of(other[k], size_cross, n_cross))].push_back(k);
    std::vector<double> old_b(static_cast<std::size_t>(n_along + 1)), new_b(old_b.size());
    for (int r = 0; r < n_cross; ++r) {
        const double* U = &util[static_cast<std::size_t>(r * n_along)];
        bool overfull = false;
        for (int j = 0; j < n_along; ++j) overfull = overfull || U[j] > target;
        if (!overfull || members[static_cast<std::size_t>(r)].empty()) continue;
        for (int j = 0; j <= n_along; ++j) old_b[static_cast<std::size_t>(j)] = new_b[static_cast<std::size_t>(j)] = j * size_along;
        for (int j = 1; j < n_along; ++j) {
            const double ul = U[j - 1], ur = U[j];
            new_b[static_cast<std::size_t>(j)] = (old_b[static_cast<std::size_t>(j - 1)] * (ur + delta) + old_b[static_cast<std::size_t>(j + 1)] * (ul + delta)) / (ul + ur + 2.0 * delta);
        }
        for (std::size_t k : members[static_cast<std::size_t>(r)]) {
            const int j = bin_of(pos[k], size_along, n_along);
            const double o0 = old_b[static_cast<std::size_t>(j)], o1 = old_b[static_cast<std::size_t>(j + 1)];
            const double n0 = new_b[static_cast<std::size_t>(j)], n1 = new_b[static_cast<std::size_t>(j + 1)];
            pos[k] = n0 + (pos[k] - o0) / (o1 - o0) * (n1 - n0);
        }
    }
}


/// Transposes a row-major rows x cols array.
inline std::vector<double> transpose(const std::vector<double>& a, int rows, int cols) {
    std::vector<double> t(a.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t[static_cast<std::size_t>(c * rows + r)] = a[static_cast<std::size_t>(r * cols + c)];
    return t;
}

/// Up to `passes` rounds of horizontal then vertical cell shifting on a
/// bins x bins grid; stops early once no bin exceeds the target density.
inline Placement cell_shift(const ChargeModel& cm, Placement pl, const std::vector<int>& ids, int bins, int passes, double delta) {
    const Netlist& g = cm.geometry;
    const double td = g.target_density, sw = g.canvas_width / bins, sh = g.canvas_height / bins;
    const std::size_t n = ids.size();
    std::vector<double> xs(n), ys(n);
    auto load = [&] {
        for (std::size_t k = 0; k < n; ++k) xs[k] = pl.at(ids[k]).x, ys[k] = pl.at(ids[k]).y;
    };
    auto store = [&] {
        for (std::size_t k = 0; k < n; ++k) pl.set(ids[k], clamp_to_canvas(g, g.nodes[static_cast<std::size_t>(ids[k])], {xs[k], ys[k]}));
    };
    for (int pass = 0; pass < passes; ++pass) {
        auto util = density_map(cm, pl, bins, bins);
        if (*std::max_element(util.begin(), util.end()) <= td * (1.0 + 1e-9)) break;
        load();
        shift_axis(xs, ys, ids, util, bins, bins, sw, sh, td, delta);
        store();
        load();
        shift_axis(ys, xs, ids, transpose(density_map(cm, pl, bins, bins), bins, bins), bins, bins, sh, sw, td, delta);
        store();
    }
    return pl;
}

/// Free capacity td * bin_area - fixed area per bin of a bins x bins grid.
inline std::vector<double> free_capacity(const ChargeModel& cm, const Placement& pl, int bins) {
    const Netlist& g = cm.geometry;
    auto fixed = rasterize(g, pl, bins, bins, [&](const Node& n) { return cm.movable[static_cast<std::size_t>(n.id)] ? 0.0 : cm.fill[static_cast<std::size_t>(n.id)]; });
    const double cap = g.target_density * (g.canvas_width / bins) * (g.canvas_height / bins);
    for (double& v : fixed) v = std::max(0.0, cap - v);
    return fixed;
}

/// Recursive bisection spreading: nodes sorted along the longer side of a
/// bin-aligned region are split in half by area, and the region is cut so
/// both halves get free capacity in the same ratio. A lone node moves to
/// the capacity centroid of its final region.
inline void bisect_spread(const ChargeModel& cm, Placement& pl, std::vector<int> nodes, int r0, int r1, int c0, int c1, const std::vector<double>& cap,
                          int bins) {
    const Netlist& g = cm.geometry;
    const double bw = g.canvas_width / bins, bh = g.canvas_height / bins;
    if (nodes.empty()) return;
    auto cap_at = [&](int r, int c) { return cap[static_cast<std::size_t>(r * bins + c)]; };
    if (nodes.size() == 1 || (r0 == r1 && c0 == c1)) {
        double sx = 0, sy = 0, sc = 0;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                sx += cap_at(r, c) * (c + 0.5) * bw;
                sy += cap_at(r, c) * (r + 0.5) * bh;
                sc += cap_at(r, c);
            }
        const Point center = sc > 0.0 ? Point{sx / sc, sy / sc} : Point{0.5 * (c0 + c1 + 1) * bw, 0.5 * (r0 + r1 + 1) * bh};
        for (int id : nodes) pl.set(id, clamp_to_canvas(g, g.nodes[static_cast<std::size_t>(id)], center));
        return;
    }
    const bool cut_x = (c1 - c0 + 1) * bw >= (r1 - r0 + 1) * bh ? c1 > c0 : r1 == r0;
    auto coord = [&](int id) { return cut_x ? pl.at(id).x : pl.at(id).y; };
    std::stable_sort(nodes.begin(), nodes.end(), [&](int a, int b) { return coord(a) != coord(b) ? coord(a) < coord(b) : a < b; });
    std::vector<double> w(nodes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) total += w[i] = g.nodes[static_cast<std::size_t>(nodes[i])].area() * cm.fill[static_cast<std::size_t>(nodes[i])];
    std::size_t split = 1;
    double left = w[0];
    while (split + 1 < nodes.size() && left + 0.5 * w[split] < 0.5 * total) left += w[split++];
    const int lo = cut_x ? c0 : r0, hi = cut_x ? c1 : r1;
    std::vector<double> line(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) line[static_cast<std::size_t>((cut_x ? c : r) - lo)] += cap_at(r, c);
    double line_total = 0.0;
    for (double v : line) line_total += v;
    const double want = total > 0.0 ? left / total : 0.5;
    int cut = lo;  // last index of the first half
    double acc = line[0];
    double best = std::abs(acc / std::max(line_total, 1e-300) - want);
    for (int i = lo + 1; i < hi; ++i) {
        acc += line[static_cast<std::size_t>(i - lo)];
        const double d = std::abs(acc / std::max(line_total, 1e-300) - want);
        if (d < best) best = d, cut = i;
    }
    std::vector<int> a(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(split)), b(nodes.begin() + static_cast<std::ptrdiff_t>(split), nodes.end());
    if (cut_x) {
        bisect_spread(cm, pl, std::move(a), r0, r1, c0, cut, cap, bins);
        bisect_spread(cm, pl, std::move(b), r0, r1, cut + 1, c1, cap, bins);
    } else {
        bisect_spread(cm, pl, std::move(a), r0, cut, c0, c1, cap, bins);
        bisect_spread(cm, pl, std::move(b), cut + 1, r1, c0, c1, cap, bins);
    }
}

}  // namespace detail

inline constexpr double kCellShiftDelta = 1.5;

/// Runs the force-directed engine on `problem`.
inline PlaceResult place_force_directed(const Problem& problem, const PlacerConfig& cfg) {
    const Netlist& nl = *problem.netlist;
    if (cfg.spread_bins < 1) throw ArgumentError("placer: spread_bins must be positive");
    PlaceResult res;
    res.placement = problem.initial;
    std::vector<int> ids, where(nl.nodes.size(), -1);
    for (const auto& node : nl.nodes) {
        if (problem.movable[static_cast<std::size_t>(node.id)]) {
            if (node.kind == NodeKind::terminal) throw ArgumentError("placer: terminals cannot be movable");
            where[static_cast<std::size_t>(node.id)] = static_cast<int>(ids.size());
            ids.push_back(node.id);
        } else if (!problem.initial.is_placed(node.id)) {
            throw PlacementError("placer: fixed node '" + node.name + "' is unplaced");
        }
    }
    if (ids.empty()) return res;
    const auto n = static_cast<int>(ids.size());
    const ChargeModel cm = charge_model(nl, problem.movable);
    auto clamp = [&](int id, Point p) { return clamp_to_canvas(cm.geometry, cm.geometry.nodes[static_cast<std::size_t>(id)], p); };
    const auto graph = expand_to_graph(nl, NetModel::clique);

    std::vector<double> diag(static_cast<std::size_t>(n), 0.0), bx0(static_cast<std::size_t>(n), 0.0), by0(static_cast<std::size_t>(n), 0.0);
    std::vector<Eigen::Triplet<double>> off;
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        return v;
    };
    std::vector<char> anchored(static_cast<std::size_t>(n), 0);
    for (const auto& e : graph.edges) {
        const int a = where[static_cast<std::size_t>(e.i)], b = where[static_cast<std::size_t>(e.j)];
        if (a < 0 && b < 0) continue;
        if (a >= 0 && b >= 0) {
            diag[static_cast<std::size_t>(a)] += e.w;
            diag[static_cast<std::size_t>(b)] += e.w;
            off.emplace_back(a, b, -e.w);
            off.emplace_back(b, a, -e.w);
            parent[static_cast<std::size_t>(find(a))] = find(b);
        } else {
            const int m = a >= 0 ? a : b;
            const Point p = problem.initial.at(a >= 0 ? e.j : e.i);
            diag[static_cast<std::size_t>(m)] += e.w;
            bx0[static_cast<std::size_t>(m)] += e.w * p.x;
            by0[static_cast<std::size_t>(m)] += e.w * p.y;
            anchored[static_cast<std::size_t>(m)] = 1;
        }
    }
    std::vector<char> comp_anchored(static_cast<std::size_t>(n), 0);
    for (int k = 0; k < n; ++k)
        if (anchored[static_cast<std::size_t>(k)]) comp_anchored[static_cast<std::size_t>(find(k))] = 1;
    const Point center{0.5 * nl.canvas_width, 0.5 * nl.canvas_height};
    int floating = 0;
    for (int k = 0; k < n; ++k) {
        if (comp_anchored[static_cast<std::size_t>(find(k))]) continue;
        ++floating;
        diag[static_cast<std::size_t>(k)] += 1.0;
        bx0[static_cast<std::size_t>(k)] += center.x;
        by0[static_cast<std::size_t>(k)] += center.y;
    }
    if (floating > 0)
        res.warnings.push_back(std::to_string(floating) + " movable node(s) have no path to a fixed node; anchored at the canvas center");

    double mean_diag = 0.0;
    for (double d : diag) mean_diag += d;
    mean_diag /= n;

    const int B = cfg.spread_bins;
    std::vector<double> ax(static_cast<std::size_t>(n)), ay(static_cast<std::size_t>(n));
    Placement pl = problem.initial;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    Eigen::VectorXd rx(n), ry(n);

    for (int it = 0; it < cfg.max_outer_iters; ++it) {
        const double alpha = cfg.anchor_weight * it * mean_diag;
        std::vector<Eigen::Triplet<double>> trip = off;
        for (int k = 0; k < n; ++k) {
            trip.emplace_back(k, k, diag[static_cast<std::size_t>(k)] + alpha);
            rx[k] = bx0[static_cast<std::size_t>(k)] + alpha * ax[static_cast<std::size_t>(k)];
            ry[k] = by0[static_cast<std::size_t>(k)] + alpha * ay[static_cast<std::size_t>(k)];
        }
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(trip.begin(), trip.end());
        solver.compute(A);
        if (solver.info() != Eigen::Success) throw PlacementError("force-directed: linear system factorization failed");
        const Eigen::VectorXd sx = solver.solve(rx), sy = solver.solve(ry);
        for (int k = 0; k < n; ++k) {
            const auto& node = nl.nodes[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
            pl.set(node.id, clamp(node.id, {sx[k], sy[k]}));
        }

        TraceRow row;
        row.iteration = it;
        row.wl = hpwl(nl, pl, cfg.use_pin_offsets);
        row.overflow = bin_overflow(cm, pl, cfg.bins, cfg.bins, nl.target_density);
        row.lambda = alpha;
        res.trace.push_back(row);
        if (row.overflow < cfg.overflow_stop) break;

        Placement target = pl;
        if (cfg.spreading == Spreading::cell_shift) target = detail::cell_shift(cm, pl, ids, B, cfg.spread_passes, kCellShiftDelta);
        else detail::bisect_spread(cm, target, ids, 0, B - 1, 0, B - 1, detail::free_capacity(cm, pl, B), B);
        for (int k = 0; k < n; ++k) {
            ax[static_cast<std::size_t>(k)] = target.at(ids[static_cast<std::size_t>(k)]).x;
            ay[static_cast<std::size_t>(k)] = target.at(ids[static_cast<std::size_t>(k)]).y;
        }
    }
    res.placement = pl;
    return res;
}

}  // namespace macroplace::placer
