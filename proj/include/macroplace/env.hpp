#pragma once

// Sequential macro placement as an episodic environment. One macro is placed
// per step on a masked grid; after the last macro the std-cell clusters are
// placed by the configured engine and the proxy cost becomes the only reward.

#include "macroplace/clustering.hpp"
#include "macroplace/design.hpp"
#include "macroplace/grid.hpp"
#include "macroplace/placer/placer.hpp"
#include "macroplace/proxy_eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace macroplace {

enum class MacroOrder { area_descending, id };

struct EnvConfig {
    int rows = 32;
    int cols = 32;
    /// Std-cell clusters; 0 selects default_cluster_count.
    int clusters = 0;
    MacroOrder order = MacroOrder::area_descending;
    /// Reward when the next macro has no feasible cell.
    double dead_end_penalty = 2.0;
    /// With the mask off every cell is offered and an infeasible pick ends
    /// the episode with the dead-end penalty.
    bool mask = true;
    placer::PlacerConfig placer;
    EvalConfig eval;
};

/// Immutable per-design data shared by every environment on that design.
struct EnvDesign {
    std::shared_ptr<const DesignBundle> bundle;
    ClusteredNetlist clustered;
    /// Base ids of the macros in placement order.
    std::vector<int> macro_order;
    /// Reduced placement holding the terminals only.
    Placement terminals;
    /// Clique expansion of the reduced netlist.
    AdjacencyGraph graph;
    int rows = 0;
    int cols = 0;

    const Netlist& base() const { return bundle->netlist; }
    const Netlist& reduced() const { return clustered.reduced; }
    int reduced_id(int base_id) const { return clustered.reduced_of_base[static_cast<std::size_t>(base_id)]; }
};

/// Macro placement order: area descending with ascending id on ties, or plain id order.
inline std::vector<int> macro_order(const Netlist& nl, MacroOrder order) {
    auto ids = macro_ids(nl);
    if (order == MacroOrder::area_descending)
        std::stable_sort(ids.begin(), ids.end(),
                         [&](int a, int b) { return nl.nodes[static_cast<std::size_t>(a)].area() > nl.nodes[static_cast<std::size_t>(b)].area(); });
    return ids;
}

/// Clusters the design once and collects the data every episode reuses.
/// Every macro is placed by the agent, whatever its movable flag.
inline std::shared_ptr<const EnvDesign> prepare_design(std::shared_ptr<const DesignBundle> bundle, const EnvConfig& cfg) {
    if (!bundle) throw ArgumentError("environment: no design");
    if (cfg.rows < 1 || cfg.cols < 1) throw ArgumentError("environment: grid needs at least one row and one column");
    const Netlist& nl = bundle->netlist;
    auto d = std::make_shared<EnvDesign>();
    d->bundle = bundle;
    d->macro_order = macro_order(nl, cfg.order);
    if (d->macro_order.empty()) throw EnvironmentError("environment: design has no macros");
    for (const auto& n : nl.nodes)
        if (n.kind == NodeKind::terminal && !bundle->placement.is_placed(n.id))
            throw EnvironmentError("environment: terminal '" + n.name + "' has no position");
    d->clustered = cluster_std_cells(std::make_shared<const Netlist>(nl), cfg.clusters > 0 ? cfg.clusters : default_cluster_count(d->macro_order.size()));
    d->terminals = Placement(d->clustered.reduced.nodes.size());
    for (const auto& n : nl.nodes)
        if (n.kind == NodeKind::terminal) d->terminals.set(d->reduced_id(n.id), bundle->placement.at(n.id));
    d->graph = expand_to_graph(d->clustered.reduced, NetModel::clique);
    d->rows = cfg.rows;
    d->cols = cfg.cols;
    return d;
}

inline std::shared_ptr<const EnvDesign> prepare_design(const DesignBundle& bundle, const EnvConfig& cfg) {
    return prepare_design(std::make_shared<const DesignBundle>(bundle), cfg);
}

/// What the agent sees before each step.
struct Observation {
    std::shared_ptr<const EnvDesign> design;
    int step = 0;
    /// Base id of the macro to place; -1 once the episode is over.
    int macro = -1;
    std::vector<char> occupancy;
    /// Reduced placement of the terminals and the macros placed so far.
    Placement placed;
    Mask mask;

    std::uint64_t digest() const {
        std::string bytes(reinterpret_cast<const char*>(&step), sizeof step);
        bytes.append(reinterpret_cast<const char*>(&macro), sizeof macro);
        bytes.append(occupancy.begin(), occupancy.end());
        return fnv1a(bytes);
    }
};

struct Outcome {
    Metrics metrics;
    /// Reduced placement: macros on the grid, clusters from the placer, terminals.
    Placement placement;
    std::vector<std::string> warnings;
};

/// Terminal outcomes keyed by the macro cells in placement order. Safe to
/// share between environments on the same design and configuration.
class OutcomeCache {
public:
    std::optional<Outcome> find(const std::vector<int>& cells) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(cells);
        if (it == map_.end()) return std::nullopt;
        ++hits_;
        return it->second;
    }

    void insert(const std::vector<int>& cells, const Outcome& o) {
        std::lock_guard<std::mutex> lock(mutex_);
        map_.emplace(cells, o);
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return map_.size();
    }

    std::size_t hits() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return hits_;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::vector<int>, Outcome> map_;
    mutable std::size_t hits_ = 0;
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
    bool dead_end = false;
    std::optional<Metrics> metrics;
};

class Environment {
public:
    Environment(std::shared_ptr<const EnvDesign> design, EnvConfig cfg, std::shared_ptr<OutcomeCache> cache = nullptr)
        : design_(std::move(design)), cfg_(std::move(cfg)), cache_(std::move(cache)) {
        if (!design_) throw ArgumentError("environment: no design");
        if (design_->rows != cfg_.rows || design_->cols != cfg_.cols) throw ArgumentError("environment: design was prepared for another grid");
        reset();
    }

    const EnvDesign& design() const { return *design_; }
    const std::shared_ptr<const EnvDesign>& design_ptr() const { return design_; }
    const EnvConfig& config() const { return cfg_; }
    const Grid& grid() const { return grid_; }
    const Observation& observation() const { return obs_; }
    bool done() const { return done_; }
    int cell_count() const { return cfg_.rows * cfg_.cols; }
    int macro_count() const { return static_cast<int>(design_->macro_order.size()); }

    /// Chosen cells so far, in placement order.
    const std::vector<int>& cells() const { return cells_; }

    /// Terminal outcome once an episode completes without a dead end.
    const std::optional<Outcome>& outcome() const { return outcome_; }

    /// Last terminal reward (0 until done).
    double reward() const { return reward_; }
    bool dead_end() const { return dead_end_; }

    /// Starts a new episode. An episode whose first macro cannot be placed
    /// anywhere is over at once with the dead-end penalty.
    const Observation& reset() {
        grid_ = make_grid(design_->base(), cfg_.rows, cfg_.cols);
        cells_.clear();
        outcome_.reset();
        done_ = false;
        dead_end_ = false;
        reward_ = 0.0;
        obs_ = Observation{};
        obs_.design = design_;
        obs_.placed = design_->terminals;
        prepare_step(0);
        return obs_;
    }

    /// Places the current macro on cell `action` (row-major).
    StepResult step(int action) {
        if (done_) throw ContractError("environment: step after the episode ended");
        if (action < 0 || action >= cell_count()) throw ContractError("environment: action " + std::to_string(action) + " outside the grid");
        const int k = static_cast<int>(cells_.size());
        const Node& m = macro_node(k);
        if (!true_mask_.at(action)) {
            if (cfg_.mask) throw ContractError("environment: action " + std::to_string(action) + " is masked for macro '" + m.name + "'");
            return finish_dead_end();
        }
        grid_ = place_on_grid(std::move(grid_), m, action / cfg_.cols, action % cfg_.cols);
        cells_.push_back(action);
        obs_.placed.set(design_->reduced_id(m.id), grid_position(grid_, design_->base(), m, action / cfg_.cols, action % cfg_.cols));

        if (k + 1 == macro_count()) {
            outcome_ = evaluate_cells(cells_);
            done_ = true;
            reward_ = outcome_->metrics.reward();
            obs_.step = k + 1;
            obs_.macro = -1;
            obs_.occupancy = grid_.occupancy;
            return {reward_, true, false, outcome_->metrics};
        }
        prepare_step(k + 1);
        if (done_) return {reward_, true, true, std::nullopt};
        return {};
    }

    /// Terminal outcome for a complete assignment (cells in placement order).
    Outcome evaluate_cells(const std::vector<int>& cells) const {
        if (static_cast<int>(cells.size()) != macro_count()) throw ArgumentError("environment: one cell per macro is required");
        if (cache_)
            if (auto hit = cache_->find(cells)) return *hit;
        const EnvDesign& d = *design_;
        Placement fixed = d.terminals;
        Grid g = make_grid(d.base(), cfg_.rows, cfg_.cols);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const Node& m = macro_node(static_cast<int>(k));
            const int c = cells[k];
            g = place_on_grid(std::move(g), m, c / cfg_.cols, c % cfg_.cols);
            fixed.set(d.reduced_id(m.id), grid_position(g, d.base(), m, c / cfg_.cols, c % cfg_.cols));
        }
        Outcome o;
        if (d.clustered.clusters.empty()) {
            o.placement = fixed;
        } else {
            auto res = placer::place_clusters(d.clustered, fixed, cfg_.placer);
            o.placement = std::move(res.placement);
            o.warnings = std::move(res.warnings);
        }
        o.metrics = evaluate(d.reduced(), o.placement, cfg_.eval);
        if (cache_) cache_->insert(cells, o);
        return o;
    }

    /// Feasibility of every cell for the current macro, ignoring the mask setting.
    const Mask& true_mask() const { return true_mask_; }

private:
    const Node& macro_node(int k) const {
        return design_->base().nodes[static_cast<std::size_t>(design_->macro_order[static_cast<std::size_t>(k)])];
    }

    void prepare_step(int k) {
        const Node& m = macro_node(k);
        true_mask_ = feasibility_mask(grid_, m);
        obs_.step = k;
        obs_.macro = m.id;
        obs_.occupancy = grid_.occupancy;
        if (!true_mask_.any()) {
            finish_dead_end();
            return;
        }
        obs_.mask = cfg_.mask ? true_mask_ : Mask{cfg_.rows, cfg_.cols, std::vector<char>(static_cast<std::size_t>(cell_count()), 1)};
    }

    StepResult finish_dead_end() {
        done_ = true;
        dead_end_ = true;
        reward_ = -cfg_.dead_end_penalty;
        obs_.macro = -1;
        obs_.mask = Mask{cfg_.rows, cfg_.cols, std::vector<char>(static_cast<std::size_t>(cell_count()), 0)};
        return {reward_, true, true, std::nullopt};
    }

    std::shared_ptr<const EnvDesign> design_;
    EnvConfig cfg_;
    std::shared_ptr<OutcomeCache> cache_;
    Grid grid_;
    Mask true_mask_;
    Observation obs_;
    std::vector<int> cells_;
    std::optional<Outcome> outcome_;
    bool done_ = false;
    bool dead_end_ = false;
    double reward_ = 0.0;
};

/// Action distribution over all cells plus the value estimate of the state.
struct PolicyOutput {
    std::vector<double> probs;
    double value = 0.0;
};

using Policy = std::function<PolicyOutput(const Observation&)>;

enum class ActionSelection { sample, greedy };

struct TrajectoryStep {
    std::uint64_t digest = 0;
    int macro = -1;
    std::vector<char> mask;
    int action = -1;
    double log_prob = 0.0;
    double value = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double reward = 0.0;
    bool dead_end = false;
    std::optional<Metrics> metrics;
    /// Chosen cells in placement order.
    std::vector<int> cells;
};

/// Uniform over the observation's mask.
inline PolicyOutput uniform_policy(const Observation& obs) {
    PolicyOutput out;
    const int n = obs.mask.count();
    out.probs.assign(obs.mask.feasible.size(), 0.0);
    for (std::size_t i = 0; i < out.probs.size(); ++i)
        if (obs.mask.feasible[i]) out.probs[i] = 1.0 / n;
    return out;
}

/// Index drawn from `probs` with one uniform draw; zero-probability cells are never chosen.
inline int sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0.0)) continue;
        last = static_cast<int>(i);
        acc += probs[i];
        if (u < acc) return last;
    }
    if (last < 0) throw ContractError("sample_index: distribution has no support");
    return last;
}

inline int argmax_index(const std::vector<double>& probs) {
    int best = -1;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0 && (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    if (best < 0) throw ContractError("argmax_index: distribution has no support");
    return best;
}

/// Runs one episode from reset; `seed` drives action sampling.
inline Trajectory rollout(Environment& env, const Policy& policy, std::uint64_t seed, ActionSelection sel = ActionSelection::sample) {
    Rng rng(seed);
    Trajectory t;
    env.reset();
    while (!env.done()) {
        const Observation& obs = env.observation();
        const PolicyOutput out = policy(obs);
        if (out.probs.size() != static_cast<std::size_t>(env.cell_count())) throw ContractError("policy returned the wrong number of cells");
        const int a = sel == ActionSelection::greedy ? argmax_index(out.probs) : sample_index(out.probs, rng);
        TrajectoryStep s;
        s.digest = obs.digest();
        s.macro = obs.macro;
        s.mask = obs.mask.feasible;
        s.action = a;
        s.log_prob = std::log(out.probs[static_cast<std::size_t>(a)]);
        s.value = out.value;
        t.steps.push_back(std::move(s));
        env.step(a);
    }
    t.reward = env.reward();
    t.dead_end = env.dead_end();
    t.cells = env.cells();
    if (env.outcome()) t.metrics = env.outcome()->metrics;
    return t;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"hpwl", m.hpwl},         {"hpwl_norm", m.hpwl_norm},   {"cong_h", m.cong_h},
            {"cong_v", m.cong_v},     {"density_overflow", m.density_overflow}, {"proxy_cost", m.proxy_cost}};
}

/// Debug dump; masks are strings of '0'/'1' in row-major order.
inline nlohmann::json to_json(const Trajectory& t, const EnvDesign& d) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.steps) {
        std::string mask(s.mask.size(), '0');
        for (std::size_t i = 0; i < s.mask.size(); ++i)
            if (s.mask[i]) mask[i] = '1';
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(s.digest));
        steps.push_back({{"digest", digest},
                         {"macro", d.base().nodes[static_cast<std::size_t>(s.macro)].name},
                         {"action", s.action},
                         {"row", s.action / d.cols},
                         {"col", s.action % d.cols},
                         {"log_prob", s.log_prob},
                         {"value", s.value},
                         {"mask", mask}});
    }
    nlohmann::json j = {{"grid", {{"rows", d.rows}, {"cols", d.cols}}}, {"steps", steps}, {"reward", t.reward}, {"dead_end", t.dead_end}};
    j["metrics"] = t.metrics ? metrics_to_json(*t.metrics) : nlohmann::json(nullptr);
    return j;
}

}  // namespace macroplace
