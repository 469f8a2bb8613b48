#pragma once

// Run configuration, design loading, the three-way comparison and the CSV,
// SVG and manifest artifacts written by the command-line tool.

#include "macroplace/agent/baselines.hpp"
#include "macroplace/agent/train.hpp"
#include "macroplace/bookshelf.hpp"
#include "macroplace/ingest.hpp"
#include "macroplace/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace macroplace::harness {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kManifestFormat = "macroplace-run";
inline constexpr const char* kCsvHeader = "design,seed,method,hpwl,cong_h,cong_v,density_overflow,proxy_cost";

/// Parses "RxC" (rows x cols), e.g. "16x16".
inline std::pair<int, int> parse_grid(std::string_view s) {
    const auto x = s.find_first_of("xX");
    long long r = 0, c = 0;
    if (x == std::string_view::npos || !parse_int(s.substr(0, x), r) || !parse_int(s.substr(x + 1), c) || r < 1 || c < 1 || r > 4096 || c > 4096)
        throw ArgumentError("grid must look like RxC with positive sides, got '" + std::string(s) + "'");
    return {static_cast<int>(r), static_cast<int>(c)};
}

inline std::string grid_string(int rows, int cols) { return std::to_string(rows) + "x" + std::to_string(cols); }

inline placer::Engine parse_engine(std::string_view s) {
    if (s == "fd" || s == "force_directed") return placer::Engine::force_directed;
    if (s == "analytical") return placer::Engine::analytical;
    throw ArgumentError("engine must be 'fd' or 'analytical', got '" + std::string(s) + "'");
}

struct BaselineConfig {
    /// Random rollouts for the `random` method; 0 matches the agent's
    /// training budget (updates x episodes_per_update).
    int random_episodes = 0;
    /// Cost evaluations for the `anneal` method; 0 matches it as well.
    int anneal_evaluations = 0;
    double anneal_t_start = 0.05;
    double anneal_t_end = 1e-4;
};

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"original", "analytical", "agent", "random", "anneal"};
    return m;
}

struct RunConfig {
    /// Design files: JSON interchange, a Bookshelf .aux, or a Bookshelf stem.
    std::vector<std::string> designs;
    /// Action grid.
    int rows = 16;
    int cols = 16;
    int clusters = 0;
    bool mask = true;
    MacroOrder order = MacroOrder::area_descending;
    double dead_end_penalty = 2.0;
    placer::PlacerConfig placer;
    EvalConfig eval;
    /// Seed and dump directory come from `seed` and `out`.
    agent::TrainConfig train;
    BaselineConfig baselines;
    std::vector<std::string> methods{"original", "analytical", "agent"};
    /// Empty selects <out>/checkpoint.json.
    std::string checkpoint;
    std::uint64_t seed = 1;
    std::string out = "out";

    EnvConfig env() const {
        EnvConfig e;
        e.rows = rows;
        e.cols = cols;
        e.clusters = clusters;
        e.order = order;
        e.dead_end_penalty = dead_end_penalty;
        e.mask = mask;
        e.placer = placer;
        e.eval = eval;
        return e;
    }

    agent::TrainConfig train_config() const {
        auto t = train;
        t.seed = seed;
        t.dump_dir = fs::path(out);
        return t;
    }

    fs::path checkpoint_path() const { return checkpoint.empty() ? fs::path(out) / "checkpoint.json" : fs::path(checkpoint); }

    long training_budget() const { return static_cast<long>(train.updates) * train.episodes_per_update; }
};

namespace detail {

using json_io::detail::reject_unknown;

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
    if (j.contains(key)) out = json_io::detail::get<T>(j, key, where);
}

template <class E>
E enum_from(const json& j, const char* key, std::initializer_list<std::pair<const char*, E>> values, E fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto s = json_io::detail::get<std::string>(j, key, where);
    for (const auto& [name, v] : values)
        if (s == name) return v;
    throw ParseError(where, 0, "bad value '" + s + "' for '" + key + "'");
}

inline const char* order_name(MacroOrder o) { return o == MacroOrder::id ? "id" : "area_descending"; }

inline json placer_json(const placer::PlacerConfig& p) {
    return {{"engine", std::string(placer::to_string(p.engine))},
            {"max_outer_iters", p.max_outer_iters},
            {"overflow_stop", p.overflow_stop},
            {"gamma", p.gamma},
            {"gamma_decay", p.gamma_decay},
            {"gamma_floor_bins", p.gamma_floor_bins},
            {"lambda0_strategy", p.lambda0_strategy == placer::Lambda0Strategy::fixed ? "fixed" : "gradient_ratio"},
            {"lambda0", p.lambda0},
            {"lambda_growth", p.lambda_growth},
            {"inner_iters", p.inner_iters},
            {"max_backtracks", p.max_backtracks},
            {"fallback_step", p.fallback_step},
            {"bins", p.bins},
            {"spectrum", p.spectrum == placer::PoissonSpectrum::continuous ? "continuous" : "discrete"},
            {"init_jitter", p.init_jitter},
            {"seed", p.seed},
            {"use_pin_offsets", p.use_pin_offsets},
            {"spreading", p.spreading == placer::Spreading::cell_shift ? "cell_shift" : "bisection"},
            {"spread_bins", p.spread_bins},
            {"spread_passes", p.spread_passes},
            {"anchor_weight", p.anchor_weight}};
}

inline placer::PlacerConfig placer_from(const json& j, const std::string& where) {
    reject_unknown(j,
                   {"engine", "max_outer_iters", "overflow_stop", "gamma", "gamma_decay", "gamma_floor_bins", "lambda0_strategy", "lambda0", "lambda_growth",
                    "inner_iters", "max_backtracks", "fallback_step", "bins", "spectrum", "init_jitter", "seed", "use_pin_offsets", "spreading", "spread_bins",
                    "spread_passes", "anchor_weight"},
                   where);
    placer::PlacerConfig p;
    if (j.contains("engine")) {
        try {
            p.engine = parse_engine(json_io::detail::get<std::string>(j, "engine", where));
        } catch (const ArgumentError& e) {
            throw ParseError(where, 0, e.what());
        }
    }
    read_opt(j, "max_outer_iters", p.max_outer_iters, where);
    read_opt(j, "overflow_stop", p.overflow_stop, where);
    read_opt(j, "gamma", p.gamma, where);
    read_opt(j, "gamma_decay", p.gamma_decay, where);
    read_opt(j, "gamma_floor_bins", p.gamma_floor_bins, where);
    p.lambda0_strategy = enum_from(j, "lambda0_strategy", {{"gradient_ratio", placer::Lambda0Strategy::gradient_ratio}, {"fixed", placer::Lambda0Strategy::fixed}},
                                   p.lambda0_strategy, where);
    read_opt(j, "lambda0", p.lambda0, where);
    read_opt(j, "lambda_growth", p.lambda_growth, where);
    read_opt(j, "inner_iters", p.inner_iters, where);
    read_opt(j, "max_backtracks", p.max_backtracks, where);
    read_opt(j, "fallback_step", p.fallback_step, where);
    read_opt(j, "bins", p.bins, where);
    p.spectrum = enum_from(j, "spectrum", {{"discrete", placer::PoissonSpectrum::discrete}, {"continuous", placer::PoissonSpectrum::continuous}}, p.spectrum, where);
    read_opt(j, "init_jitter", p.init_jitter, where);
    read_opt(j, "seed", p.seed, where);
    read_opt(j, "use_pin_offsets", p.use_pin_offsets, where);
    p.spreading = enum_from(j, "spreading", {{"bisection", placer::Spreading::bisection}, {"cell_shift", placer::Spreading::cell_shift}}, p.spreading, where);
    read_opt(j, "spread_bins", p.spread_bins, where);
    read_opt(j, "spread_passes", p.spread_passes, where);
    read_opt(j, "anchor_weight", p.anchor_weight, where);
    if (!(p.overflow_stop > 0.0 && p.overflow_stop < 1.0)) throw ParseError(where, 0, "'overflow_stop' must lie in (0, 1)");
    if (p.gamma < 0.0) throw ParseError(where, 0, "'gamma' must be positive (0 selects the default)");
    if (p.bins < 2 || (p.bins & (p.bins - 1)) != 0) throw ParseError(where, 0, "'bins' must be a power of two");
    return p;
}

inline json eval_json(const EvalConfig& e) {
    return {{"grid", grid_string(e.rows, e.cols)},
            {"capacity_h", e.capacity_h},
            {"capacity_v", e.capacity_v},
            {"top_fraction", e.top_fraction},
            {"use_pin_offsets", e.use_pin_offsets},
            {"weights", {{"hpwl", e.weights.hpwl}, {"congestion", e.weights.congestion}, {"density", e.weights.density}}}};
}

inline EvalConfig eval_from(const json& j, const std::string& where) {
    reject_unknown(j, {"grid", "capacity_h", "capacity_v", "top_fraction", "use_pin_offsets", "weights"}, where);
    EvalConfig e;
    if (j.contains("grid")) {
        try {
            std::tie(e.rows, e.cols) = parse_grid(json_io::detail::get<std::string>(j, "grid", where));
        } catch (const ArgumentError& err) {
            throw ParseError(where, 0, err.what());
        }
    }
    read_opt(j, "capacity_h", e.capacity_h, where);
    read_opt(j, "capacity_v", e.capacity_v, where);
    read_opt(j, "top_fraction", e.top_fraction, where);
    read_opt(j, "use_pin_offsets", e.use_pin_offsets, where);
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        reject_unknown(w, {"hpwl", "congestion", "density"}, where + ":weights");
        read_opt(w, "hpwl", e.weights.hpwl, where + ":weights");
        read_opt(w, "congestion", e.weights.congestion, where + ":weights");
        read_opt(w, "density", e.weights.density, where + ":weights");
        if (e.weights.hpwl < 0.0 || e.weights.congestion < 0.0 || e.weights.density < 0.0) throw ParseError(where, 0, "reward weights must be non-negative");
    }
    if (!(e.capacity_h > 0.0 && e.capacity_v > 0.0)) throw ParseError(where, 0, "capacities must be positive");
    if (!(e.top_fraction > 0.0 && e.top_fraction <= 1.0)) throw ParseError(where, 0, "'top_fraction' must lie in (0, 1]");
    return e;
}

inline json train_json(const agent::TrainConfig& t) {
    return {{"updates", t.updates},         {"episodes_per_update", t.episodes_per_update},
            {"learning_rate", t.learning_rate}, {"entropy_weight", t.loss.entropy},
            {"value_weight", t.loss.value}, {"grad_clip", t.grad_clip},
            {"dim", t.dim},                 {"rounds", t.rounds},
            {"workers", t.workers},         {"warm_start_value", t.warm_start_value}};
}

inline agent::TrainConfig train_from(const json& j, const std::string& where) {
    reject_unknown(j, {"updates", "episodes_per_update", "learning_rate", "entropy_weight", "value_weight", "grad_clip", "dim", "rounds", "workers", "warm_start_value"},
                   where);
    agent::TrainConfig t;
    read_opt(j, "updates", t.updates, where);
    read_opt(j, "episodes_per_update", t.episodes_per_update, where);
    read_opt(j, "learning_rate", t.learning_rate, where);
    read_opt(j, "entropy_weight", t.loss.entropy, where);
    read_opt(j, "value_weight", t.loss.value, where);
    read_opt(j, "grad_clip", t.grad_clip, where);
    read_opt(j, "dim", t.dim, where);
    read_opt(j, "rounds", t.rounds, where);
    read_opt(j, "workers", t.workers, where);
    read_opt(j, "warm_start_value", t.warm_start_value, where);
    if (t.updates < 0 || t.episodes_per_update < 1) throw ParseError(where, 0, "'updates' must be >= 0 and 'episodes_per_update' >= 1");
    if (t.dim < 1 || t.rounds < 1 || t.workers < 1) throw ParseError(where, 0, "'dim', 'rounds' and 'workers' must be positive");
    if (!(t.learning_rate > 0.0)) throw ParseError(where, 0, "'learning_rate' must be positive");
    return t;
}

}  // namespace detail

/// Canonical JSON of a configuration; the config hash is taken over its dump.
inline json config_to_json(const RunConfig& c) {
    return {{"version", kConfigVersion},
            {"designs", c.designs},
            {"grid", grid_string(c.rows, c.cols)},
            {"clusters", c.clusters},
            {"mask", c.mask},
            {"macro_order", detail::order_name(c.order)},
            {"dead_end_penalty", c.dead_end_penalty},
            {"placer", detail::placer_json(c.placer)},
            {"eval", detail::eval_json(c.eval)},
            {"train", detail::train_json(c.train)},
            {"baselines",
             {{"random_episodes", c.baselines.random_episodes},
              {"anneal_evaluations", c.baselines.anneal_evaluations},
              {"anneal_t_start", c.baselines.anneal_t_start},
              {"anneal_t_end", c.baselines.anneal_t_end}}},
            {"methods", c.methods},
            {"checkpoint", c.checkpoint},
            {"seed", c.seed},
            {"out", c.out}};
}

/// Strict parse: unknown keys and malformed values raise ParseError naming
/// `where` and the key. Relative design and checkpoint paths resolve
/// against `base_dir`, and so does `out`.
inline RunConfig config_from_json(const json& j, const std::string& where, const fs::path& base_dir = {}) {
    using detail::read_opt;
    detail::reject_unknown(j,
                           {"version", "designs", "grid", "clusters", "mask", "macro_order", "dead_end_penalty", "placer", "eval", "train", "baselines", "methods",
                            "checkpoint", "seed", "out"},
                           where);
    RunConfig c;
    int version = kConfigVersion;
    read_opt(j, "version", version, where);
    if (version != kConfigVersion) throw ParseError(where, 0, "unsupported config version " + std::to_string(version));
    read_opt(j, "designs", c.designs, where);
    for (auto& d : c.designs)
        if (fs::path(d).is_relative() && !base_dir.empty()) d = (base_dir / d).lexically_normal().string();
    if (j.contains("grid")) {
        try {
            std::tie(c.rows, c.cols) = parse_grid(json_io::detail::get<std::string>(j, "grid", where));
        } catch (const ArgumentError& e) {
            throw ParseError(where, 0, e.what());
        }
    }
    read_opt(j, "clusters", c.clusters, where);
    if (c.clusters < 0) throw ParseError(where, 0, "'clusters' must be non-negative");
    read_opt(j, "mask", c.mask, where);
    c.order = detail::enum_from(j, "macro_order", {{"area_descending", MacroOrder::area_descending}, {"id", MacroOrder::id}}, c.order, where);
    read_opt(j, "dead_end_penalty", c.dead_end_penalty, where);
    if (j.contains("placer")) c.placer = detail::placer_from(j["placer"], where + ":placer");
    if (j.contains("eval")) c.eval = detail::eval_from(j["eval"], where + ":eval");
    if (j.contains("train")) c.train = detail::train_from(j["train"], where + ":train");
    if (j.contains("baselines")) {
        const auto& b = j["baselines"];
        const std::string w = where + ":baselines";
        detail::reject_unknown(b, {"random_episodes", "anneal_evaluations", "anneal_t_start", "anneal_t_end"}, w);
        read_opt(b, "random_episodes", c.baselines.random_episodes, w);
        read_opt(b, "anneal_evaluations", c.baselines.anneal_evaluations, w);
        read_opt(b, "anneal_t_start", c.baselines.anneal_t_start, w);
        read_opt(b, "anneal_t_end", c.baselines.anneal_t_end, w);
        if (c.baselines.random_episodes < 0 || c.baselines.anneal_evaluations < 0) throw ParseError(w, 0, "budgets must be non-negative");
    }
    read_opt(j, "methods", c.methods, where);
    for (const auto& m : c.methods)
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) throw ParseError(where, 0, "unknown method '" + m + "'");
    read_opt(j, "checkpoint", c.checkpoint, where);
    if (!c.checkpoint.empty() && fs::path(c.checkpoint).is_relative() && !base_dir.empty()) c.checkpoint = (base_dir / c.checkpoint).lexically_normal().string();
    read_opt(j, "seed", c.seed, where);
    read_opt(j, "out", c.out, where);
    if (fs::path(c.out).is_relative() && !base_dir.empty()) c.out = (base_dir / c.out).lexically_normal().string();
    return c;
}

/// Reads a config file, or the config embedded in a run manifest.
inline RunConfig load_config(const fs::path& path) {
    const json j = json_io::read_json_file(path);
    const fs::path base = fs::absolute(path).parent_path();
    if (j.is_object() && j.value("format", "") == kManifestFormat) {
        if (!j.contains("config")) throw ParseError(path.string(), 0, "manifest has no 'config'");
        return config_from_json(j["config"], path.string() + ":config", base);
    }
    return config_from_json(j, path.string(), base);
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(config_to_json(c).dump())); }

/// Throws IoError naming the first design path that does not exist.
inline void check_design_paths(const RunConfig& c) {
    for (const auto& d : c.designs) {
        const fs::path p(d);
        if (fs::exists(p)) continue;
        if (fs::exists(fs::path(d + ".nodes"))) continue;
        throw IoError("design '" + d + "' does not exist");
    }
}

/// Display name of a design path: the file name without its extension.
inline std::string design_name(const std::string& path) { return fs::path(path).stem().string(); }

/// Loads a JSON interchange file, a Bookshelf .aux, or a Bookshelf stem.
inline DesignBundle load_design(const std::string& path, const bookshelf::ParseOptions& opt = {}) {
    const fs::path p(path);
    if (p.extension() == ".json") return json_io::read_design(p);
    if (p.extension() == ".aux" || fs::exists(fs::path(path + ".nodes"))) return bookshelf::parse_aux_or_stem(p, opt);
    if (!fs::exists(p)) throw IoError("design '" + path + "' does not exist");
    throw ArgumentError("design '" + path + "': expected a .json, a .aux or a Bookshelf stem");
}

// ---------------------------------------------------------------- methods

/// Places the clusters around macros fixed at `base_pl` and evaluates.
inline Outcome evaluate_macro_positions(const EnvDesign& d, const Placement& base_pl, const EnvConfig& cfg) {
    Placement fixed = d.terminals;
    for (int id : d.macro_order) {
        if (!base_pl.is_placed(id))
            throw EnvironmentError("design has no location for macro '" + d.base().nodes[static_cast<std::size_t>(id)].name +
                                   "'; the original method needs one (gen --place-macros, or a .pl with macro positions)");
        fixed.set(d.reduced_id(id), base_pl.at(id));
    }
    Outcome o;
    if (d.clustered.clusters.empty()) {
        o.placement = std::move(fixed);
    } else {
        auto res = placer::place_clusters(d.clustered, fixed, cfg.placer);
        o.placement = std::move(res.placement);
        o.warnings = std::move(res.warnings);
    }
    o.metrics = evaluate(d.reduced(), o.placement, cfg.eval);
    return o;
}

/// Metrics of a design's own placement. Flat mode scores every node where
/// it is. Otherwise the std cells are scored through their clusters: at the
/// members' area-weighted centers when every std cell is placed, else placed
/// by the configured engine around the macros.
inline Outcome evaluate_design(const DesignBundle& b, const RunConfig& rc, bool flat) {
    if (flat) {
        Outcome o;
        o.placement = b.placement;
        o.metrics = evaluate(b.netlist, b.placement, rc.eval);
        return o;
    }
    const auto d = prepare_design(std::make_shared<const DesignBundle>(b), rc.env());
    bool cells_placed = true;
    for (const auto& n : b.netlist.nodes) cells_placed = cells_placed && (n.kind != NodeKind::std_cell || b.placement.is_placed(n.id));
    if (!cells_placed) return evaluate_macro_positions(*d, b.placement, rc.env());
    Outcome o;
    o.placement = reduce_placement(d->clustered, b.placement);
    o.metrics = evaluate(d->reduced(), o.placement, rc.eval);
    return o;
}

/// Macro cells from one analytical run with macros and clusters both
/// movable, legalized onto the action grid in placement order: each macro
/// takes the feasible cell whose center is nearest its continuous position.
inline std::vector<int> analytical_spread_cells(const EnvDesign& d, const EnvConfig& cfg) {
    const Netlist& nl = d.reduced();
    placer::PlacerConfig pc = cfg.placer;
    pc.engine = placer::Engine::analytical;
    placer::Problem p{&nl, d.terminals, std::vector<char>(nl.nodes.size(), 0)};
    Rng rng(mix_seed(pc.seed, 0x6d616372ULL));
    for (const auto& node : nl.nodes) {
        if (node.kind == NodeKind::terminal) continue;
        p.movable[static_cast<std::size_t>(node.id)] = 1;
        p.initial.set(node.id, clamp_to_canvas(nl, node, placer::initial_position(nl, pc, rng)));
    }
    const auto res = placer::place(p, pc);
    Grid g = make_grid(d.base(), cfg.rows, cfg.cols);
    std::vector<int> cells;
    for (int id : d.macro_order) {
        const Node& m = d.base().nodes[static_cast<std::size_t>(id)];
        const Point target = res.placement.at(d.reduced_id(id));
        const auto mask = feasibility_mask(g, m);
        int best = -1;
        double best_d = 0.0;
        for (int c = 0; c < cfg.rows * cfg.cols; ++c) {
            if (!mask.at(c)) continue;
            const Point q = grid_position(g, d.base(), m, c / cfg.cols, c % cfg.cols);
            const double dist = (q.x - target.x) * (q.x - target.x) + (q.y - target.y) * (q.y - target.y);
            if (best < 0 || dist < best_d) best = c, best_d = dist;
        }
        if (best < 0) throw PlacementError("analytical spreading: no feasible cell left for macro '" + m.name + "'");
        g = place_on_grid(std::move(g), m, best / cfg.cols, best % cfg.cols);
        cells.push_back(best);
    }
    return cells;
}

/// One evaluated placement of a design.
struct MethodResult {
    std::string method;
    Metrics metrics;
    /// Reduced placement (macros, clusters, terminals).
    Placement placement;
    /// Action cells when the macros sit on the grid.
    std::vector<int> cells;
};

/// Runs `method` on a prepared design. `params` is required for "agent".
inline MethodResult run_method(const std::string& method, const std::shared_ptr<const EnvDesign>& d, const RunConfig& rc, const agent::Params* params) {
    const EnvConfig cfg = rc.env();
    Environment env(d, cfg);
    MethodResult r;
    r.method = method;
    auto take = [&](const std::vector<int>& cells) {
        auto o = env.evaluate_cells(cells);
        r.metrics = o.metrics;
        r.placement = std::move(o.placement);
        r.cells = cells;
    };
    const long budget = std::max(1L, rc.training_budget());
    if (method == "original") {
        auto o = evaluate_macro_positions(*d, d->bundle->placement, cfg);
        r.metrics = o.metrics;
        r.placement = std::move(o.placement);
    } else if (method == "analytical") {
        take(analytical_spread_cells(*d, cfg));
    } else if (method == "agent") {
        if (!params) throw ArgumentError("the agent method needs a checkpoint");
        if (params->arch.rows != cfg.rows || params->arch.cols != cfg.cols)
            throw ArgumentError("checkpoint was trained on a " + grid_string(params->arch.rows, params->arch.cols) + " grid, run uses " +
                                grid_string(cfg.rows, cfg.cols));
        const auto ctx = agent::make_context(d);
        const auto t = rollout(env, agent::make_policy(*params, ctx), rc.seed, ActionSelection::greedy);
        if (t.dead_end) throw EnvironmentError("the trained policy dead-ends on this design");
        take(t.cells);
    } else if (method == "random") {
        const int n = rc.baselines.random_episodes > 0 ? rc.baselines.random_episodes : static_cast<int>(budget);
        const auto s = agent::random_search(env, n, rc.seed);
        if (s.cells.empty()) throw EnvironmentError("every random rollout dead-ended");
        take(s.cells);
    } else if (method == "anneal") {
        agent::AnnealConfig ac;
        ac.evaluations = rc.baselines.anneal_evaluations > 0 ? rc.baselines.anneal_evaluations : static_cast<int>(budget);
        ac.t_start = rc.baselines.anneal_t_start;
        ac.t_end = rc.baselines.anneal_t_end;
        ac.seed = rc.seed;
        take(agent::simulated_annealing(env, ac).cells);
    } else {
        throw ArgumentError("unknown method '" + method + "'");
    }
    return r;
}

/// Base-netlist placement: macros and terminals where they are, every std
/// cell at its cluster's position.
inline Placement export_placement(const EnvDesign& d, const Placement& reduced) { return expand_placement(d.clustered, reduced); }

// -------------------------------------------------------------------- CSV

struct CsvRow {
    std::string design;
    std::uint64_t seed = 0;
    std::string method;
    /// Empty for a dead end; proxy_cost then carries the penalty.
    std::optional<Metrics> metrics;
    double proxy_cost = 0.0;
};

inline CsvRow csv_row(std::string design, std::uint64_t seed, std::string method, const Metrics& m) {
    return {std::move(design), seed, std::move(method), m, m.proxy_cost};
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline std::string to_csv(const std::vector<CsvRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += csv_field(r.design) + "," + std::to_string(r.seed) + "," + csv_field(r.method) + ",";
        if (r.metrics)
            out += format_double(r.metrics->hpwl) + "," + format_double(r.metrics->cong_h) + "," + format_double(r.metrics->cong_v) + "," +
                   format_double(r.metrics->density_overflow) + ",";
        else
            out += ",,,,";
        out += format_double(r.proxy_cost) + "\n";
    }
    return out;
}

/// Per method: mean HPWL over designs divided by the smallest such mean,
/// in first-appearance order of the methods.
inline std::vector<std::pair<std::string, double>> hpwl_ratios(const std::vector<CsvRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        if (!r.metrics) continue;
        if (!acc.count(r.method)) order.push_back(r.method);
        auto& a = acc[r.method];
        a.first += r.metrics->hpwl;
        a.second += 1;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [m, a] : acc) best = std::min(best, a.first / a.second);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& m : order) {
        const auto& a = acc[m];
        const double mean = a.first / a.second;
        out.emplace_back(m, best > 0.0 ? mean / best : 1.0);
    }
    return out;
}

/// Comparison CSV: metric rows followed by one "ratio" row per method with
/// the HPWL ratio in the hpwl column and the other metric columns empty.
inline std::string comparison_csv(const std::vector<CsvRow>& rows, std::uint64_t seed) {
    std::string out = to_csv(rows);
    for (const auto& [m, ratio] : hpwl_ratios(rows)) out += "ratio," + std::to_string(seed) + "," + csv_field(m) + "," + format_double(ratio) + ",,,,\n";
    return out;
}

/// Fixed-width console rendering of a comparison.
inline std::string comparison_table(const std::vector<CsvRow>& rows) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-20s %-11s %12s %8s %8s %8s %8s\n", "design", "method", "hpwl", "cong_h", "cong_v", "dens_of", "cost");
    out += buf;
    for (const auto& r : rows) {
        if (r.metrics)
            std::snprintf(buf, sizeof buf, "%-20s %-11s %12.2f %8.4f %8.4f %8.4f %8.4f\n", r.design.c_str(), r.method.c_str(), r.metrics->hpwl, r.metrics->cong_h,
                          r.metrics->cong_v, r.metrics->density_overflow, r.proxy_cost);
        else
            std::snprintf(buf, sizeof buf, "%-20s %-11s %12s %8s %8s %8s %8.4f\n", r.design.c_str(), r.method.c_str(), "-", "-", "-", "-", r.proxy_cost);
        out += buf;
    }
    std::string ratio = "ratio                           ";
    for (const auto& [m, v] : hpwl_ratios(rows)) {
        std::snprintf(buf, sizeof buf, " %s %.3f", m.c_str(), v);
        ratio += buf;
    }
    return out + ratio + "\n";
}

// -------------------------------------------------------------------- SVG

struct RenderInput {
    const Netlist* netlist = nullptr;
    /// Base placement; unplaced nodes are skipped.
    const Placement* placement = nullptr;
    /// Cluster centers and areas, drawn as points.
    std::vector<std::pair<Point, double>> clusters;
    std::optional<CongestionMap> congestion;
    double size_px = 800.0;
};

inline std::string xml_escape(std::string_view s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

/// SVG of the canvas (y up), a congestion heat layer, labeled macro
/// rectangles, cluster points and terminals. Layers are <g> elements with
/// ids canvas, congestion, macros, clusters and terminals.
inline std::string render_svg(const RenderInput& in) {
    if (!in.netlist) throw ArgumentError("render: no netlist");
    const Netlist& nl = *in.netlist;
    const double cw = nl.canvas_width > 0.0 ? nl.canvas_width : 1.0;
    const double ch = nl.canvas_height > 0.0 ? nl.canvas_height : 1.0;
    const double s = in.size_px / std::max(cw, ch);
    const double W = cw * s, H = ch * s;
    char buf[512];
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };
    auto rect = [&](double lx, double ly, double ux, double uy) {
        return "x=\"" + num(lx * s) + "\" y=\"" + num((ch - uy) * s) + "\" width=\"" + num((ux - lx) * s) + "\" height=\"" + num((uy - ly) * s) + "\"";
    };
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
    out += "<g id=\"canvas\"><rect " + rect(0, 0, cw, ch) + " fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"1\"/></g>\n";
    if (in.congestion) {
        const auto& m = *in.congestion;
        out += "<g id=\"congestion\">\n";
        for (int r = 0; r < m.rows; ++r)
            for (int c = 0; c < m.cols; ++c) {
                const double u = std::max(m.h(r, c) / m.capacity_h, m.v(r, c) / m.capacity_v);
                if (!(u > 0.0)) continue;
                const double op = 0.6 * std::min(1.0, u);
                out += "<rect " + rect(c * m.cell_w, r * m.cell_h, (c + 1) * m.cell_w, (r + 1) * m.cell_h) + " fill=\"#d73027\" fill-opacity=\"" + num(op) +
                       "\"><title>" + num(u) + "</title></rect>\n";
            }
        out += "</g>\n";
    }
    if (in.placement) {
        const Placement& pl = *in.placement;
        out += "<g id=\"macros\">\n";
        for (const auto& n : nl.nodes) {
            if (n.kind != NodeKind::macro || !pl.is_placed(n.id)) continue;
            const Rect b = node_rect(n, pl.at(n.id));
            out += "<rect " + rect(b.lx, b.ly, b.ux, b.uy) + " fill=\"#4575b4\" fill-opacity=\"0.7\" stroke=\"#08306b\"/>";
            std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"%.1f\" text-anchor=\"middle\" fill=\"#ffffff\">", pl.at(n.id).x * s,
                          (ch - pl.at(n.id).y) * s, std::clamp(0.3 * std::min(n.width, n.height) * s, 6.0, 18.0));
            out += buf + xml_escape(n.name) + "</text>\n";
        }
        out += "</g>\n";
    }
    if (!in.clusters.empty()) {
        double max_area = 0.0;
        for (const auto& c : in.clusters) max_area = std::max(max_area, c.second);
        out += "<g id=\"clusters\">\n";
        for (const auto& [p, a] : in.clusters) {
            const double r = 2.0 + 6.0 * std::sqrt(max_area > 0.0 ? a / max_area : 0.0);
            std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"#1a9850\" fill-opacity=\"0.8\"/>\n", p.x * s, (ch - p.y) * s, r);
            out += buf;
        }
        out += "</g>\n";
    }
    if (in.placement) {
        out += "<g id=\"terminals\">\n";
        for (const auto& n : nl.nodes) {
            if (n.kind != NodeKind::terminal || !in.placement->is_placed(n.id)) continue;
            const Point p = in.placement->at(n.id);
            std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"6\" height=\"6\" fill=\"#000000\"/>\n", p.x * s - 3.0, (ch - p.y) * s - 3.0);
            out += buf;
        }
        out += "</g>\n";
    }
    return out + "</svg>\n";
}

/// Render input for a design: clusters come from the std-cell positions
/// when all are placed, otherwise from a cluster placement around the
/// placed macros; congestion needs every macro and terminal placed.
inline std::string render_design(const DesignBundle& b, const RunConfig& rc) {
    RenderInput in;
    in.netlist = &b.netlist;
    in.placement = &b.placement;
    const auto& nl = b.netlist;
    bool fixed_ready = true, cells_ready = true;
    std::size_t cells = 0;
    for (const auto& n : nl.nodes) {
        if (n.kind == NodeKind::std_cell) {
            ++cells;
            cells_ready = cells_ready && b.placement.is_placed(n.id);
        } else {
            fixed_ready = fixed_ready && b.placement.is_placed(n.id);
        }
    }
    if (cells > 0 && (cells_ready || fixed_ready)) {
        const int k = rc.clusters > 0 ? rc.clusters : default_cluster_count(macro_ids(nl).size());
        const auto cn = cluster_std_cells(std::make_shared<const Netlist>(nl), k);
        Placement red = reduce_placement(cn, b.placement);
        if (!cells_ready) red = placer::place_clusters(cn, red, rc.placer).placement;
        for (std::size_t c = 0; c < cn.clusters.size(); ++c) in.clusters.emplace_back(red.at(cn.cluster_node(static_cast<int>(c))), cn.clusters[c].area);
        in.congestion = congestion_map(cn.reduced, red, rc.eval);
    } else if (!nl.nodes.empty() && fixed_ready && !nl.nets.empty()) {
        in.congestion = congestion_map(nl, b.placement, rc.eval);
    }
    return render_svg(in);
}

// --------------------------------------------------------------- manifest

/// Writes <out>/manifest.json: command, arguments, seed, config hash, the
/// full resolved config and the artifact list.
inline void write_manifest(const fs::path& out, const std::string& command, const std::vector<std::string>& args, const RunConfig& rc,
                           std::vector<std::string> artifacts) {
    std::sort(artifacts.begin(), artifacts.end());
    const json m = {{"format", kManifestFormat}, {"command", command},          {"args", args}, {"seed", rc.seed}, {"config_hash", config_hash(rc)},
                    {"config", config_to_json(rc)}, {"artifacts", artifacts}};
    json_io::write_text_file(out / "manifest.json", m.dump(1) + "\n");
}

}  // namespace macroplace::harness
