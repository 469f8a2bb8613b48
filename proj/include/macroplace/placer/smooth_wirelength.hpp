#pragma once

// Log-sum-exp wirelength: per net and axis,
//   smax = gamma * ln sum exp(x / gamma),  smin = -gamma * ln sum exp(-x / gamma).
// Exponentials are shifted by the per-net extreme so they never overflow.

#include "macroplace/netlist.hpp"

#include <cmath>
#include <vector>

namespace macroplace::placer {

struct SmoothWL {
    double value = 0.0;
    /// d value / d center, per node (zero for nodes not requested).
    std::vector<Point> grad;
};

namespace detail {

/// Smoothed extent of `xs` and its gradient into `dx`.
inline double lse_extent(const std::vector<double>& xs, double gamma, std::vector<double>& dx) {
    double mx = xs.front(), mn = xs.front();
    for (double x : xs) mx = std::max(mx, x), mn = std::min(mn, x);
    double s_max = 0.0, s_min = 0.0;
    dx.resize(xs.size());
    for (double x : xs) {
        s_max += std::exp((x - mx) / gamma);
        s_min += std::exp((mn - x) / gamma);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) dx[i] = std::exp((xs[i] - mx) / gamma) / s_max - std::exp((mn - xs[i]) / gamma) / s_min;
    return (mx + gamma * std::log(s_max)) - (mn - gamma * std::log(s_min));
}

}  // namespace detail

/// Smoothed weighted wirelength and its gradient w.r.t. every node center.
/// Requires every pin's node to be placed.
inline SmoothWL smooth_wl_and_grad(const Netlist& nl, const Placement& pl, double gamma, bool use_pin_offsets = false) {
    if (!(gamma > 0.0)) throw ArgumentError("smooth_wl_and_grad: gamma must be positive");
    SmoothWL out;
    out.grad.assign(nl.nodes.size(), Point{});
    std::vector<double> xs, ys, dx, dy;
    for (const auto& net : nl.nets) {
        if (net.pins.size() < 2) continue;
        xs.clear();
        ys.clear();
        for (const auto& pin : net.pins) {
            if (!pl.is_placed(pin.node)) throw EvaluationError("smooth_wl_and_grad: unplaced node '" + nl.nodes[static_cast<std::size_t>(pin.node)].name + "'");
            const Point p = pin_position(pl, pin, use_pin_offsets);
            xs.push_back(p.x);
            ys.push_back(p.y);
        }
        out.value += net.weight * (detail::lse_extent(xs, gamma, dx) + detail::lse_extent(ys, gamma, dy));
        for (std::size_t i = 0; i < net.pins.size(); ++i) {
            auto& g = out.grad[static_cast<std::size_t>(net.pins[i].node)];
            g.x += net.weight * dx[i];
            g.y += net.weight * dy[i];
        }
    }
    return out;
}

}  // namespace macroplace::placer
