#pragma once

// Finite-difference helpers shared by the unit tests and the acceptance run.

#include "macroplace/agent/network.hpp"
#include "macroplace/env.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace checkutil {

using namespace macroplace;

/// L2 norm of the difference over the L2 norm of the reference.
inline double rel_err_l2(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Max |a - b| over the tensor relative to the largest reference magnitude.
inline double rel_err_max(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
        scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    return scale > 0.0 ? diff / scale : diff;
}

/// Pushes every movable node edge at least `gap` away from the bin boundaries.
inline Placement off_boundaries(const Netlist& nl, Placement pl, const std::vector<char>& movable, int bins, double gap, Rng& rng) {
    const double bw = nl.canvas_width / bins, bh = nl.canvas_height / bins;
    auto near = [](double v, double size, double g) {
        const double r = std::fmod(v, size);
        return r < g || size - r < g;
    };
    for (const auto& node : nl.nodes) {
        if (!movable[static_cast<std::size_t>(node.id)]) continue;
        for (int tries = 0; tries < 1000; ++tries) {
            const Rect r = node_rect(node, pl.at(node.id));
            if (!near(r.lx, bw, gap) && !near(r.ux, bw, gap) && !near(r.ly, bh, gap) && !near(r.uy, bh, gap) && r.lx > gap && r.ly > gap &&
                r.ux < nl.canvas_width - gap && r.uy < nl.canvas_height - gap)
                break;
            pl.set(node.id, clamp_to_canvas(nl, node, {pl.at(node.id).x + rng.uniform(-bw, bw), pl.at(node.id).y + rng.uniform(-bh, bh)}));
            const Point c = pl.at(node.id);
            pl.set(node.id, {std::clamp(c.x, 0.5 * node.width + 2 * gap, nl.canvas_width - 0.5 * node.width - 2 * gap),
                             std::clamp(c.y, 0.5 * node.height + 2 * gap, nl.canvas_height - 0.5 * node.height - 2 * gap)});
        }
    }
    return pl;
}

struct FrozenStep {
    Observation obs;
    int action;
    double advantage;
    double ret;
};

/// Observations and actions of a few sampled episodes with advantages
/// computed once at `p`, so the loss is a plain function of the parameters.
inline std::vector<FrozenStep> frozen_batch(const agent::Params& p, const agent::DesignContext& ctx, Environment& env, int episodes) {
    std::vector<FrozenStep> out;
    for (int e = 0; e < episodes; ++e) {
        std::vector<Observation> seen;
        std::vector<double> values;
        Policy inner = agent::make_policy(p, ctx);
        const auto t = rollout(
            env,
            [&](const Observation& obs) {
                seen.push_back(obs);
                auto o = inner(obs);
                values.push_back(o.value);
                return o;
            },
            static_cast<std::uint64_t>(e + 1));
        for (std::size_t k = 0; k < seen.size(); ++k) out.push_back({seen[k], t.steps[k].action, t.reward - values[k], t.reward});
    }
    return out;
}

inline double batch_loss(const agent::Params& p, const agent::DesignContext& ctx, const std::vector<FrozenStep>& batch, const agent::LossWeights& w,
                         agent::Params* g = nullptr) {
    double total = 0.0;
    for (const auto& s : batch) total += agent::step_loss(p, ctx, agent::forward(p, ctx, s.obs), s.action, s.advantage, s.ret, w, g).total(w);
    return total;
}

/// Largest per-tensor relative error between backprop and central
/// differences of `batch_loss`.
inline double loss_gradient_error(const agent::Params& p, const agent::DesignContext& ctx, const std::vector<FrozenStep>& batch, const agent::LossWeights& w,
                                  double h = 1e-6) {
    agent::Params g = agent::Params::zeros(p.arch);
    batch_loss(p, ctx, batch, w, &g);
    double worst = 0.0;
    for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        std::vector<double> numeric(p.tensors[t].data.size());
        for (std::size_t k = 0; k < numeric.size(); ++k) {
            agent::Params q = p;
            q.tensors[t].data[k] += h;
            const double up = batch_loss(q, ctx, batch, w);
            q.tensors[t].data[k] -= 2 * h;
            const double down = batch_loss(q, ctx, batch, w);
            numeric[k] = (up - down) / (2 * h);
        }
        worst = std::max(worst, rel_err_max(g.tensors[t].data, numeric));
    }
    return worst;
}

}  // namespace checkutil
