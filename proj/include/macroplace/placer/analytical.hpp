#pragma once

// Electrostatic analytical placement: Nesterov descent on
//   smooth_wl(gamma) + lambda * density_energy
// with a Lipschitz step estimate and a diagonal preconditioner.

#include "macroplace/placer/density.hpp"
#include "macroplace/placer/problem.hpp"
#include "macroplace/placer/smooth_wirelength.hpp"

#include <cmath>
#include <vector>

namespace macroplace::placer {

namespace detail {

struct AnalyticalModel {
    const Netlist& nl;
    const std::vector<int>& ids;
    PoissonSolver& solver;
    const ChargeModel& cm;
    Placement pl;
    std::vector<double> pins;
    double gamma = 1.0;
    double lambda = 1.0;
    bool use_pin_offsets = false;

    std::size_t n() const { return ids.size(); }

    void load(const std::vector<double>& x) {
        for (std::size_t k = 0; k < ids.size(); ++k) pl.set(ids[k], {x[k], x[k + ids.size()]});
    }

    void clamp(std::vector<double>& x) const {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const Point c = clamp_to_canvas(cm.geometry, cm.geometry.nodes[static_cast<std::size_t>(ids[k])], {x[k], x[k + ids.size()]});
            x[k] = c.x;
            x[k + ids.size()] = c.y;
        }
    }

    /// Raw wirelength and density gradients at x.
    void raw_gradients(const std::vector<double>& x, std::vector<double>& g_wl, std::vector<double>& g_d, double* energy = nullptr) {
        load(x);
        const auto wl = smooth_wl_and_grad(nl, pl, gamma, use_pin_offsets);
        const auto de = density_energy_and_grad(cm, pl, solver);
        g_wl.assign(2 * n(), 0.0);
        g_d.assign(2 * n(), 0.0);
        for (std::size_t k = 0; k < n(); ++k) {
            const auto id = static_cast<std::size_t>(ids[k]);
            g_wl[k] = wl.grad[id].x;
            g_wl[k + n()] = wl.grad[id].y;
            g_d[k] = de.grad[id].x;
            g_d[k + n()] = de.grad[id].y;
        }
        if (energy) *energy = de.field.energy;
    }

    /// Preconditioned gradient of smooth_wl + lambda * energy.
    std::vector<double> gradient(const std::vector<double>& x) {
        std::vector<double> gw, gd;
        raw_gradients(x, gw, gd);
        const double bin_area = solver.bin_w() * solver.bin_h();
        std::vector<double> g(2 * n());
        for (std::size_t k = 0; k < n(); ++k) {
            const auto& node = nl.nodes[static_cast<std::size_t>(ids[k])];
            const double h = std::max(1.0, pins[k] + lambda * node.area() / bin_area);
            g[k] = (gw[k] + lambda * gd[k]) / h;
            g[k + n()] = (gw[k + n()] + lambda * gd[k + n()]) / h;
        }
        return g;
    }
};

inline double norm2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double abs_sum(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

inline double abs_max(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

}  // namespace detail

/// Runs the analytical engine on `problem`; every non-movable node must be placed.
inline PlaceResult place_analytical(const Problem& problem, const PlacerConfig& cfg) {
    const Netlist& nl = *problem.netlist;
    if (cfg.bins < 2 || (cfg.bins & (cfg.bins - 1)) != 0) throw ArgumentError("placer: bins must be a power of two >= 2");
    PlaceResult res;
    res.placement = problem.initial;
    std::vector<int> ids;
    for (const auto& node : nl.nodes) {
        if (problem.movable[static_cast<std::size_t>(node.id)]) {
            if (node.kind == NodeKind::terminal) throw ArgumentError("placer: terminals cannot be movable");
            ids.push_back(node.id);
        } else if (!problem.initial.is_placed(node.id)) {
            throw PlacementError("placer: fixed node '" + node.name + "' is unplaced");
        }
    }
    if (ids.empty()) return res;

    const double bw = nl.canvas_width / cfg.bins, bh = nl.canvas_height / cfg.bins;
    const double bin = 0.5 * (bw + bh);
    PoissonSolver solver(cfg.bins, cfg.bins, bw, bh, cfg.spectrum);
    const ChargeModel cm = charge_model(nl, problem.movable);
    detail::AnalyticalModel model{nl, ids, solver, cm, problem.initial, {}, cfg.gamma > 0.0 ? cfg.gamma : 4.0 * bin, 1.0,
                                  cfg.use_pin_offsets};
    model.pins.assign(ids.size(), 0.0);
    {
        std::vector<int> where(nl.nodes.size(), -1);
        for (std::size_t k = 0; k < ids.size(); ++k) where[static_cast<std::size_t>(ids[k])] = static_cast<int>(k);
        for (const auto& net : nl.nets)
            for (const auto& p : net.pins)
                if (where[static_cast<std::size_t>(p.node)] >= 0) model.pins[static_cast<std::size_t>(where[static_cast<std::size_t>(p.node)])] += 1.0;
    }
    const std::size_t n = ids.size();
    const double gamma_floor = cfg.gamma_floor_bins * bin;

    std::vector<double> u(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point p = problem.initial.at(ids[k]);
        u[k] = p.x;
        u[k + n] = p.y;
    }
    model.clamp(u);

    {
        std::vector<double> gw, gd;
        model.raw_gradients(u, gw, gd);
        const double sd = detail::abs_sum(gd);
        model.lambda = cfg.lambda0_strategy == Lambda0Strategy::fixed ? cfg.lambda0 : (sd > 0.0 ? detail::abs_sum(gw) / sd : 1.0);
        if (!(model.lambda > 0.0) || !std::isfinite(model.lambda)) model.lambda = 1.0;
    }

    const double canvas = std::max(nl.canvas_width, nl.canvas_height);
    std::vector<double> v = u;
    std::vector<double> g = model.gradient(v);
    double alpha = 0.0;
    {
        const double gm = detail::abs_max(g);
        std::vector<double> prev = v;
        if (gm > 0.0)
            for (std::size_t i = 0; i < prev.size(); ++i) prev[i] -= bin * g[i] / gm;
        model.clamp(prev);
        const auto gp = model.gradient(prev);
        const double dg = detail::norm2(g, gp);
        alpha = dg > 0.0 ? detail::norm2(v, prev) / dg : (gm > 0.0 ? bin / gm : bin);
    }

    auto record = [&](int it) {
        model.load(u);
        TraceRow row;
        row.iteration = it;
        row.wl = hpwl(nl, model.pl, cfg.use_pin_offsets);
        const auto field = solve_density_field(cm, model.pl, solver);
        row.energy = field.energy;
        row.overflow = bin_overflow(cm, model.pl, cfg.bins, cfg.bins, nl.target_density);
        row.lambda = model.lambda;
        if (cfg.check_poisson) row.poisson_residual = poisson_residual(field);
        res.trace.push_back(row);
        return row.overflow;
    };

    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        double a = 1.0;
        v = u;
        g = model.gradient(v);
        for (int inner = 0; inner < cfg.inner_iters; ++inner) {
            std::vector<double> u_new, v_new, g_new;
            double a_new = 0.0, alpha_new = 0.0;
            bool accepted = false;
            for (int attempt = 0; attempt < cfg.max_backtracks && !accepted; ++attempt) {
                u_new = v;
                for (std::size_t i = 0; i < u_new.size(); ++i) u_new[i] -= alpha * g[i];
                model.clamp(u_new);
                a_new = 0.5 * (1.0 + std::sqrt(4.0 * a * a + 1.0));
                v_new = u_new;
                for (std::size_t i = 0; i < v_new.size(); ++i) v_new[i] += (a - 1.0) / a_new * (u_new[i] - u[i]);
                model.clamp(v_new);
                g_new = model.gradient(v_new);
                const double dg = detail::norm2(g_new, g);
                alpha_new = dg > 0.0 ? detail::norm2(v_new, v) / dg : alpha;
                if (alpha_new >= 0.95 * alpha || !(alpha_new > 0.0)) {
                    accepted = true;
                } else {
                    alpha = alpha_new;
                }
            }
            if (!accepted) {
                const double gm = detail::abs_max(g);
                alpha = gm > 0.0 ? cfg.fallback_step * canvas / gm : alpha;
                u_new = v;
                for (std::size_t i = 0; i < u_new.size(); ++i) u_new[i] -= alpha * g[i];
                model.clamp(u_new);
                v_new = u_new;
                g_new = model.gradient(v_new);
                a_new = 1.0;
                alpha_new = alpha;
            }
            u = std::move(u_new);
            v = std::move(v_new);
            g = std::move(g_new);
            a = a_new;
            if (alpha_new > 0.0 && std::isfinite(alpha_new)) alpha = alpha_new;
        }
        const double overflow = record(outer);
        if (overflow < cfg.overflow_stop) break;
        model.lambda *= cfg.lambda_growth;
        model.gamma = std::max(gamma_floor, model.gamma * cfg.gamma_decay);
    }

    model.load(u);
    res.placement = model.pl;
    return res;
}

}  // namespace macroplace::placer
