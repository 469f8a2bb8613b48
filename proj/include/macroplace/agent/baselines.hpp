#pragma once

// Non-learning comparators on the same environment: best-of-N random
// rollouts, simulated annealing over macro relocations, and exhaustive
// enumeration for tiny instances.

#include "macroplace/env.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace macroplace::agent {

struct SearchResult {
    double reward = -std::numeric_limits<double>::infinity();
    /// Best macro cells in placement order; empty when every episode dead-ended.
    std::vector<int> cells;
    long evaluations = 0;
    /// random: best reward after each episode; annealing: current cost after each move.
    std::vector<double> trace;
};

/// Best of `n` uniform masked rollouts; episode i uses seed mix_seed(seed, i).
inline SearchResult random_search(Environment& env, int n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("random_search: n must be at least 1");
    SearchResult r;
    for (int i = 0; i < n; ++i) {
        const auto t = rollout(env, uniform_policy, mix_seed(seed, static_cast<std::uint64_t>(i)));
        ++r.evaluations;
        if (t.reward > r.reward) {
            r.reward = t.reward;
            r.cells = t.dead_end ? std::vector<int>{} : t.cells;
        }
        r.trace.push_back(r.reward);
    }
    return r;
}

struct AnnealConfig {
    /// Cost evaluations, including the starting placement.
    int evaluations = 1000;
    /// Geometric schedule from t_start to t_end; t_start = 0 accepts only non-worsening moves.
    double t_start = 0.05;
    double t_end = 1e-4;
    std::uint64_t seed = 1;
};

/// Relocates one macro per move to a random feasible cell and applies the
/// Metropolis rule to the proxy cost.
inline SearchResult simulated_annealing(Environment& env, const AnnealConfig& cfg) {
    if (cfg.evaluations < 1) throw ArgumentError("simulated_annealing: at least one evaluation is required");
    if (cfg.t_start < 0.0 || cfg.t_end < 0.0) throw ArgumentError("simulated_annealing: temperatures must be non-negative");
    Rng rng(cfg.seed);
    const EnvDesign& d = env.design();
    const Netlist& nl = d.base();
    const int cols = env.config().cols, rows = env.config().rows;

    std::vector<int> cells;
    for (int attempt = 0; attempt < 100 && cells.empty(); ++attempt) {
        const auto t = rollout(env, uniform_policy, mix_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
        if (!t.dead_end) cells = t.cells;
    }
    if (cells.empty()) throw EnvironmentError("simulated_annealing: no complete random placement found to start from");

    SearchResult r;
    double cost = env.evaluate_cells(cells).metrics.proxy_cost;
    r.evaluations = 1;
    r.reward = -cost;
    r.cells = cells;
    r.trace.push_back(cost);
    const int moves = cfg.evaluations - 1;
    const int k_count = static_cast<int>(cells.size());
    for (int i = 0; i < moves; ++i) {
        const double temp = cfg.t_start <= 0.0 ? 0.0
                            : moves == 1      ? cfg.t_start
                                              : cfg.t_start * std::pow(cfg.t_end / cfg.t_start, static_cast<double>(i) / (moves - 1));
        const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(k_count)));
        Grid g = make_grid(nl, rows, cols);
        for (int j = 0; j < k_count; ++j)
            if (j != k) {
                const int c = cells[static_cast<std::size_t>(j)];
                g = place_on_grid(std::move(g), nl.nodes[static_cast<std::size_t>(d.macro_order[static_cast<std::size_t>(j)])], c / cols, c % cols);
            }
        const auto mask = feasibility_mask(g, nl.nodes[static_cast<std::size_t>(d.macro_order[static_cast<std::size_t>(k)])]);
        std::vector<int> options;
        for (int c = 0; c < rows * cols; ++c)
            if (mask.at(c) && c != cells[static_cast<std::size_t>(k)]) options.push_back(c);
        if (!options.empty()) {
            auto next = cells;
            next[static_cast<std::size_t>(k)] = options[static_cast<std::size_t>(rng.below(options.size()))];
            const double next_cost = env.evaluate_cells(next).metrics.proxy_cost;
            ++r.evaluations;
            const double delta = next_cost - cost;
            const double u = rng.uniform();
            if (delta <= 0.0 || (temp > 0.0 && u < std::exp(-delta / temp))) {
                cells = std::move(next);
                cost = next_cost;
                if (-cost > r.reward) {
                    r.reward = -cost;
                    r.cells = cells;
                }
            }
        }
        r.trace.push_back(cost);
    }
    return r;
}

struct OracleResult : SearchResult {
    /// Complete sequences evaluated.
    long sequences = 0;
    /// Prefixes that ended in a dead end.
    long dead_ends = 0;
};

inline constexpr int kOracleMaxMacros = 3;
inline constexpr int kOracleMaxGridSide = 16;

namespace detail {

template <class Visit>
void enumerate_sequences(const EnvDesign& d, int rows, int cols, Visit&& visit, long& dead_ends) {
    const Netlist& nl = d.base();
    std::vector<int> prefix;
    auto dfs = [&](auto&& self, const Grid& g, std::size_t k) -> void {
        if (k == d.macro_order.size()) {
            visit(prefix);
            return;
        }
        const Node& m = nl.nodes[static_cast<std::size_t>(d.macro_order[k])];
        const auto mask = feasibility_mask(g, m);
        if (!mask.any()) {
            ++dead_ends;
            return;
        }
        for (int c = 0; c < rows * cols; ++c) {
            if (!mask.at(c)) continue;
            prefix.push_back(c);
            if (k + 1 == d.macro_order.size())
                visit(prefix);
            else
                self(self, place_on_grid(g, m, c / cols, c % cols), k + 1);
            prefix.pop_back();
        }
    };
    dfs(dfs, make_grid(nl, rows, cols), 0);
}

}  // namespace detail

/// Number of complete masked action sequences.
inline long count_sequences(const Environment& env) {
    long n = 0, dead = 0;
    detail::enumerate_sequences(env.design(), env.config().rows, env.config().cols, [&](const std::vector<int>&) { ++n; }, dead);
    return n;
}

/// Exact best over all masked action sequences. Refuses designs with more
/// than three macros, grids above 16x16, or more sequences than `budget`.
inline OracleResult exhaustive_oracle(Environment& env, long budget = 200000) {
    const auto& cfg = env.config();
    if (env.macro_count() > kOracleMaxMacros || cfg.rows > kOracleMaxGridSide || cfg.cols > kOracleMaxGridSide)
        throw ArgumentError("exhaustive_oracle: limited to " + std::to_string(kOracleMaxMacros) + " macros on at most " + std::to_string(kOracleMaxGridSide) + "x" +
                            std::to_string(kOracleMaxGridSide) + " cells; design has " + std::to_string(env.macro_count()) + " macros on " +
                            std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols));
    const long needed = count_sequences(env);
    if (needed > budget)
        throw ArgumentError("exhaustive_oracle: needs " + std::to_string(needed) + " evaluations, budget is " + std::to_string(budget));
    OracleResult r;
    detail::enumerate_sequences(
        env.design(), cfg.rows, cfg.cols,
        [&](const std::vector<int>& seq) {
            const double reward = env.evaluate_cells(seq).metrics.reward();
            ++r.sequences;
            ++r.evaluations;
            if (reward > r.reward) {
                r.reward = reward;
                r.cells = seq;
            }
        },
        r.dead_ends);
    if (r.dead_ends > 0 && -cfg.dead_end_penalty > r.reward) {
        r.reward = -cfg.dead_end_penalty;
        r.cells.clear();
    }
    return r;
}

}  // namespace macroplace::agent
