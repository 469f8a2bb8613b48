#pragma once

// Environment feedback: HPWL, RUDY-style congestion, density overflow and
// the scalar proxy cost (reward = -cost).

#include "macroplace/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace macroplace {

/// Per-cell routing demand in tracks (wire length crossing the cell divided
/// by the cell extent along the wire).
struct CongestionMap {
    int rows = 0;
    int cols = 0;
    double cell_w = 0.0;
    double cell_h = 0.0;
    std::vector<double> demand_h;
    std::vector<double> demand_v;
    double capacity_h = 1.0;
    double capacity_v = 1.0;

    double h(int row, int col) const { return demand_h[static_cast<std::size_t>(row * cols + col)]; }
    double v(int row, int col) const { return demand_v[static_cast<std::size_t>(row * cols + col)]; }
};

struct RewardWeights {
    double hpwl = 1.0;
    double congestion = 0.5;
    double density = 0.5;
};

struct EvalConfig {
    /// Evaluation grid; independent of the action grid so capacities keep
    /// their calibrated meaning.
    int rows = 16;
    int cols = 16;
    /// Track capacities per cell. Default: the 95th percentile of per-cell
    /// demand over random masked macro placements of the reference synthetic
    /// suite on the 16x16 evaluation grid (see tools/calibrate_capacity.cpp).
    double capacity_h = 10.5;
    double capacity_v = 10.5;
    double top_fraction = 0.1;
    RewardWeights weights{};
    bool use_pin_offsets = false;
};

struct Metrics {
    double hpwl = 0.0;
    double hpwl_norm = 0.0;
    double cong_h = 0.0;
    double cong_v = 0.0;
    double density_overflow = 0.0;
    double proxy_cost = 0.0;

    double reward() const { return -proxy_cost; }

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

namespace detail {

/// Fractions of [lo, hi] falling in each of n cells of size `cell`; a
/// degenerate interval puts everything in its containing cell.
inline void axis_fractions(double lo, double hi, double cell, int n, const std::function<void(int, double)>& emit) {
    const double len = hi - lo;
    if (len <= 0.0) {
        const int i = std::clamp(static_cast<int>(std::floor(lo / cell)), 0, n - 1);
        emit(i, 1.0);
        return;
    }
    const int i0 = std::clamp(static_cast<int>(std::floor(lo / cell)), 0, n - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor(hi / cell)), 0, n - 1);
    for (int i = i0; i <= i1; ++i) {
        // The first and last cells absorb any part of the interval lying outside the grid.
        const double a = i == 0 ? std::min(lo, 0.0) : i * cell;
        const double b = i == n - 1 ? std::max(hi, n * cell) : (i + 1) * cell;
        const double ov = overlap_length(lo, hi, a, b);
        if (ov > 0.0) emit(i, ov / len);
    }
}

}  // namespace detail

/// RUDY smearing. A net with bounding box w_b x h_b needs
/// max(w_b, cell_w)/cell_w horizontal and max(h_b, cell_h)/cell_h vertical
/// tracks (times its weight), spread over the cells its box overlaps in
/// proportion to overlap area. For boxes at least one cell in each dimension
/// this equals weight/h_b (resp. weight/w_b) integrated over the overlap.
inline CongestionMap congestion_map(const Netlist& nl, const Placement& pl, int rows, int cols, double capacity_h, double capacity_v,
                                    bool use_pin_offsets = false) {
    if (rows < 1 || cols < 1) throw ArgumentError("congestion_map: empty grid");
    CongestionMap m;
    m.rows = rows;
    m.cols = cols;
    m.cell_w = nl.canvas_width / cols;
    m.cell_h = nl.canvas_height / rows;
    m.capacity_h = capacity_h;
    m.capacity_v = capacity_v;
    m.demand_h.assign(static_cast<std::size_t>(rows * cols), 0.0);
    m.demand_v.assign(static_cast<std::size_t>(rows * cols), 0.0);
    std::vector<std::pair<int, double>> fx, fy;
    for (const auto& net : nl.nets) {
        const auto box = net_bbox(nl, pl, net, use_pin_offsets);
        if (!box) continue;
        const double th = net.weight * std::max(box->width(), m.cell_w) / m.cell_w;
        const double tv = net.weight * std::max(box->height(), m.cell_h) / m.cell_h;
        fx.clear();
        fy.clear();
        detail::axis_fractions(box->lx, box->ux, m.cell_w, cols, [&](int i, double f) { fx.push_back({i, f}); });
        detail::axis_fractions(box->ly, box->uy, m.cell_h, rows, [&](int i, double f) { fy.push_back({i, f}); });
        for (const auto& [r, f_r] : fy)
            for (const auto& [c, f_c] : fx) {
                const auto idx = static_cast<std::size_t>(r * cols + c);
                m.demand_h[idx] += th * f_r * f_c;
                m.demand_v[idx] += tv * f_r * f_c;
            }
    }
    return m;
}

inline CongestionMap congestion_map(const Netlist& nl, const Placement& pl, const EvalConfig& cfg) {
    return congestion_map(nl, pl, cfg.rows, cfg.cols, cfg.capacity_h, cfg.capacity_v, cfg.use_pin_offsets);
}

struct CongestionScores {
    double cong_h = 0.0;
    double cong_v = 0.0;
};

namespace detail {

inline double top_overflow_mean(const std::vector<double>& demand, double capacity, double top_fraction) {
    if (demand.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(demand.size()) - 1e-9));
    const auto take = std::clamp<std::size_t>(k, 1, demand.size());
    std::vector<double> v(demand);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(take - 1), v.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t i = 0; i < take; ++i) s += std::max(0.0, v[i] - capacity) / capacity;
    return s / static_cast<double>(take);
}

}  // namespace detail

/// Mean relative overflow over the most congested ceil(top_fraction * cells) cells.
inline CongestionScores congestion_scores(const CongestionMap& m, double top_fraction = 0.1) {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw ArgumentError("congestion_scores: top_fraction must be in (0, 1]");
    return {detail::top_overflow_mean(m.demand_h, m.capacity_h, top_fraction), detail::top_overflow_mean(m.demand_v, m.capacity_v, top_fraction)};
}

/// Area of placed non-terminal nodes per grid cell (row-major).
inline std::vector<double> cell_areas(const Netlist& nl, const Placement& pl, int rows, int cols) {
    const double cw = nl.canvas_width / cols, ch = nl.canvas_height / rows;
    std::vector<double> a(static_cast<std::size_t>(rows * cols), 0.0);
    for (const auto& node : nl.nodes) {
        if (node.kind == NodeKind::terminal || !pl.is_placed(node.id)) continue;
        const Rect r = node_rect(node, pl.at(node.id));
        const int c0 = std::clamp(static_cast<int>(std::floor(r.lx / cw)), 0, cols - 1);
        const int c1 = std::clamp(static_cast<int>(std::floor(r.ux / cw)), 0, cols - 1);
        const int r0 = std::clamp(static_cast<int>(std::floor(r.ly / ch)), 0, rows - 1);
        const int r1 = std::clamp(static_cast<int>(std::floor(r.uy / ch)), 0, rows - 1);
        for (int i = r0; i <= r1; ++i) {
            const double oy = overlap_length(r.ly, r.uy, i * ch, (i + 1) * ch);
            if (oy <= 0.0) continue;
            for (int j = c0; j <= c1; ++j) a[static_cast<std::size_t>(i * cols + j)] += oy * overlap_length(r.lx, r.ux, j * cw, (j + 1) * cw);
        }
    }
    return a;
}

/// Sum over cells of the area above target_density, over total placed
/// non-terminal area.
inline double density_overflow(const Netlist& nl, const Placement& pl, int rows, int cols, double target_density) {
    if (rows < 1 || cols < 1) throw ArgumentError("density_overflow: empty grid");
    double total = 0.0;
    for (const auto& node : nl.nodes)
        if (node.kind != NodeKind::terminal && pl.is_placed(node.id)) total += node.area();
    if (total <= 0.0) return 0.0;
    const double cap = target_density * (nl.canvas_width / cols) * (nl.canvas_height / rows);
    double over = 0.0;
    for (double a : cell_areas(nl, pl, rows, cols)) over += std::max(0.0, a - cap);
    return over / total;
}

/// Normalized wirelength: HPWL over (net count x canvas half-perimeter).
inline double normalized_hpwl(double hpwl_value, std::size_t net_count, double canvas_w, double canvas_h) {
    if (net_count == 0) return 0.0;
    return hpwl_value / (static_cast<double>(net_count) * (canvas_w + canvas_h));
}

inline double proxy_cost(double hpwl_norm, double cong_h, double cong_v, double density_overflow_value, const RewardWeights& w) {
    if (w.hpwl < 0.0 || w.congestion < 0.0 || w.density < 0.0) throw ArgumentError("proxy_cost: weights must be non-negative");
    return w.hpwl * hpwl_norm + w.congestion * 0.5 * (cong_h + cong_v) + w.density * density_overflow_value;
}

/// Full metric set for a placed design.
inline Metrics evaluate(const Netlist& nl, const Placement& pl, const EvalConfig& cfg) {
    Metrics m;
    m.hpwl = hpwl(nl, pl, cfg.use_pin_offsets);
    m.hpwl_norm = normalized_hpwl(m.hpwl, nl.nets.size(), nl.canvas_width, nl.canvas_height);
    const auto scores = congestion_scores(congestion_map(nl, pl, cfg), cfg.top_fraction);
    m.cong_h = scores.cong_h;
    m.cong_v = scores.cong_v;
    m.density_overflow = density_overflow(nl, pl, cfg.rows, cfg.cols, nl.target_density);
    m.proxy_cost = proxy_cost(m.hpwl_norm, m.cong_h, m.cong_v, m.density_overflow, cfg.weights);
    return m;
}

}  // namespace macroplace
