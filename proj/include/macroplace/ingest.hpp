#pragma once

#include "macroplace/bookshelf.hpp"
#include "macroplace/design.hpp"
#include "macroplace/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace macroplace {

/// Target density after edits: utilization rounded up to the next multiple
/// of 0.05, kept within [0.05, 1].
inline double round_up_target_density(double utilization) {
    const double steps = std::ceil(utilization * 20.0 - 1e-9);
    return std::clamp(steps, 1.0, 20.0) / 20.0;
}

/// Benchmark edit: drop blockages/regions, make every macro movable and
/// recompute the target density. Orientation stays fixed; requesting
/// otherwise is rejected.
inline DesignBundle edit_for_movable_macros(DesignBundle bundle, bool fix_orientation = true) {
    if (!fix_orientation) throw ArgumentError("orientation optimization is not supported; macro orientation stays fixed");
    auto& nl = bundle.netlist;
    for (auto& n : nl.nodes) {
        if (n.kind != NodeKind::macro) continue;
        if (n.width > nl.canvas_width || n.height > nl.canvas_height)
            throw EditError("macro '" + n.name + "' is larger than the canvas");
        n.movable = true;
    }
    bundle.blockages.clear();
    const double canvas = nl.canvas_area();
    nl.target_density = round_up_target_density(canvas > 0.0 ? nl.movable_area() / canvas : 0.0);
    return bundle;
}

struct SyntheticSpec {
    int macro_count = 4;
    int std_cell_count = 400;
    int net_count = 480;
    /// Mean pins per net (at least 2).
    double rent_like_fanout = 3.0;
    std::uint64_t seed = 1;
    /// Zero means "derive from area at 60% utilization".
    double canvas_width = 0.0;
    double canvas_height = 0.0;
    /// Record macro positions (hidden-embedding locations clamped into the
    /// canvas, possibly overlapping) as the design's original locations.
    bool place_macros = false;
};

/// Seeded synthetic design. Std cells are one row tall (row height 1); macro
/// areas are 10-100x the mean std-cell area with the shorter side at least
/// four rows. Nets are drawn with locality in a hidden 2-D embedding so the
/// design has a meaningful good placement. Only the four corner terminals
/// are placed.
inline DesignBundle generate_synthetic(const SyntheticSpec& spec) {
    if (spec.macro_count < 0 || spec.std_cell_count < 0 || spec.net_count < 0)
        throw ArgumentError("synthetic spec counts must be non-negative");
    if (!(spec.rent_like_fanout >= 2.0)) throw ArgumentError("synthetic spec fanout must be at least 2");
    if (spec.canvas_width < 0.0 || spec.canvas_height < 0.0) throw ArgumentError("synthetic canvas must be non-negative");

    Rng rng(spec.seed);
    auto half_steps = [](double v) { return std::max(0.5, std::round(v * 2.0) / 2.0); };

    constexpr double kRowHeight = 1.0;
    constexpr double kMeanCellArea = 2.5;  // widths uniform over {1, 1.5, ..., 4}
    struct Proto {
        double w, h;
        NodeKind kind;
    };
    std::vector<Proto> protos;
    for (int i = 0; i < spec.macro_count; ++i) {
        const double area = rng.uniform(10.0, 100.0) * kMeanCellArea;
        const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        double w = half_steps(std::sqrt(area * aspect));
        double h = half_steps(area / w);
        w = std::max(w, 4.0 * kRowHeight);
        h = std::max(h, 4.0 * kRowHeight);
        protos.push_back({w, h, NodeKind::macro});
    }
    for (int i = 0; i < spec.std_cell_count; ++i) {
        const double w = 1.0 + 0.5 * static_cast<double>(rng.below(7));
        protos.push_back({w, kRowHeight, NodeKind::std_cell});
    }
    double movable = 0.0;
    double max_w = 1.0, max_h = 1.0;
    for (const auto& p : protos) {
        movable += p.w * p.h;
        max_w = std::max(max_w, p.w);
        max_h = std::max(max_h, p.h);
    }

    double cw = spec.canvas_width, ch = spec.canvas_height;
    if (cw == 0.0 || ch == 0.0) {
        const double side = std::max({std::ceil(std::sqrt(movable / 0.6)), std::ceil(max_w) + 2.0, std::ceil(max_h) + 2.0, 4.0});
        if (cw == 0.0) cw = side;
        if (ch == 0.0) ch = side;
    }
    if (movable > cw * ch) throw GenerationError("movable area exceeds canvas area");
    for (const auto& p : protos)
        if (p.w > cw || p.h > ch) throw GenerationError("macro does not fit the canvas");

    Netlist nl;
    nl.canvas_width = cw;
    nl.canvas_height = ch;
    int mi = 0, ci = 0;
    for (const auto& p : protos) {
        if (p.kind == NodeKind::macro) nl.add_node("m" + std::to_string(mi++), p.w, p.h, p.kind);
        else nl.add_node("c" + std::to_string(ci++), p.w, p.h, p.kind);
    }
    const Point corners[4] = {{0.5, 0.5}, {cw - 0.5, 0.5}, {0.5, ch - 0.5}, {cw - 0.5, ch - 0.5}};
    const Point latent_corners[4] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int t = 0; t < 4; ++t) nl.add_node("t" + std::to_string(t), 1.0, 1.0, NodeKind::terminal, false);
    nl.target_density = round_up_target_density(movable / (cw * ch));

    const int n = static_cast<int>(nl.nodes.size());
    std::vector<Point> latent(static_cast<std::size_t>(n));
    for (int i = 0; i < n - 4; ++i) latent[static_cast<std::size_t>(i)] = {rng.uniform(), rng.uniform()};
    for (int t = 0; t < 4; ++t) latent[static_cast<std::size_t>(n - 4 + t)] = latent_corners[t];

    const double f = spec.rent_like_fanout;
    const double q = (f - 2.0) / (f - 1.0);  // geometric tail with mean f - 2
    // Std-cell anchors walk a shuffled permutation so every cell anchors a net
    // before any anchors a second one.
    std::vector<int> cover(static_cast<std::size_t>(spec.std_cell_count));
    std::iota(cover.begin(), cover.end(), 0);
    for (std::size_t i = cover.size(); i > 1; --i) std::swap(cover[i - 1], cover[static_cast<std::size_t>(rng.below(i))]);
    std::size_t next_cover = 0;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (int k = 0; k < spec.net_count; ++k) {
        int extra = 0;
        if (q > 0.0) {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            extra = static_cast<int>(std::floor(std::log(u) / std::log(q)));
        }
        const int degree = std::min(2 + extra, n);
        if (degree < 2) break;  // fewer than two nodes in the design

        int anchor;
        const double pick = rng.uniform();
        if (spec.macro_count > 0 && pick < 0.15) anchor = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.macro_count)));
        else if (pick < 0.20) anchor = n - 4 + static_cast<int>(rng.below(4));
        else if (spec.std_cell_count > 0) anchor = spec.macro_count + cover[next_cover++ % cover.size()];
        else anchor = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

        const Point a = latent[static_cast<std::size_t>(anchor)];
        for (int i = 0; i < n; ++i) {
            const Point p = latent[static_cast<std::size_t>(i)];
            dist[static_cast<std::size_t>(i)] = (p.x - a.x) * (p.x - a.x) + (p.y - a.y) * (p.y - a.y);
        }
        std::iota(order.begin(), order.end(), 0);
        const int pool = std::min(n - 1, 3 * degree);
        std::partial_sort(order.begin(), order.begin() + pool + 1, order.end(), [&](int x, int y) {
            if (x == anchor || y == anchor) return x == anchor && y != anchor;
            const auto dx = dist[static_cast<std::size_t>(x)], dy = dist[static_cast<std::size_t>(y)];
            return dx != dy ? dx < dy : x < y;
        });
        // order[0] is the anchor; choose degree-1 distinct nodes from the pool.
        std::vector<int> cand(order.begin() + 1, order.begin() + 1 + pool);
        std::vector<Pin> pins{{anchor, 0.0, 0.0}};
        for (int j = 0; j < degree - 1 && !cand.empty(); ++j) {
            const auto idx = static_cast<std::size_t>(rng.below(cand.size()));
            pins.push_back({cand[idx], 0.0, 0.0});
            cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(idx));
        }
        for (auto& pin : pins) {
            const auto& node = nl.nodes[static_cast<std::size_t>(pin.node)];
            if (node.kind != NodeKind::macro) continue;
            pin.offset_x = std::round(rng.uniform(-0.4, 0.4) * node.width * 4.0) / 4.0;
            pin.offset_y = std::round(rng.uniform(-0.4, 0.4) * node.height * 4.0) / 4.0;
        }
        nl.add_net("n" + std::to_string(k), std::move(pins));
    }

    auto bundle = make_bundle(std::move(nl), "synthetic:seed=" + std::to_string(spec.seed));
    bundle.row_height = kRowHeight;
    for (int t = 0; t < 4; ++t) bundle.placement.set(n - 4 + t, corners[t]);
    if (spec.place_macros)
        for (int i = 0; i < spec.macro_count; ++i) {
            const auto& node = bundle.netlist.nodes[static_cast<std::size_t>(i)];
            const Point l = latent[static_cast<std::size_t>(i)];
            bundle.placement.set(i, clamp_to_canvas(bundle.netlist, node, {l.x * cw, l.y * ch}));
        }
    return bundle;
}

}  // namespace macroplace
