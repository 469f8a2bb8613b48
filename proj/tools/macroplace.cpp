// macroplace: benchmark statistics and editing, synthetic generation,
// training, rollouts, evaluation, method comparison and SVG rendering.
//
// Every artifact is written under --out next to a manifest.json recording
// the resolved config, its hash and the seed. Failures print one JSON line
// on stderr and exit nonzero (2 for usage and config errors, 1 otherwise).

#include "macroplace/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace macroplace;
using namespace macroplace::harness;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    std::string engine;
    std::string grid;
    int clusters = 0;
    bool no_mask = false;
    std::vector<std::string> designs;
    /// The parsed subcommand, for telling set flags from defaults.
    const CLI::App* parsed = nullptr;
};

void add_common(CLI::App* sc, Common& c) {
    sc->add_option("--config", c.config, "run config (JSON) or a run manifest")->check(CLI::ExistingFile);
    sc->add_option("--seed", c.seed, "run seed");
    sc->add_option("--out", c.out, "output directory (default: out)");
    sc->add_option("--engine", c.engine, "std-cell placer engine")->check(CLI::IsMember({"fd", "analytical"}));
    sc->add_option("--grid", c.grid, "action grid RxC");
    sc->add_option("--clusters", c.clusters, "std-cell cluster count (0 = default)")->check(CLI::NonNegativeNumber);
    sc->add_flag("--no-mask", c.no_mask, "offer infeasible cells; picking one ends the episode with the dead-end penalty");
}

RunConfig resolve(const Common& c) {
    RunConfig rc = c.config.empty() ? RunConfig{} : load_config(c.config);
    if (c.parsed->count("--seed")) rc.seed = c.seed;
    if (!c.out.empty()) rc.out = c.out;
    if (!c.engine.empty()) rc.placer.engine = parse_engine(c.engine);
    if (!c.grid.empty()) std::tie(rc.rows, rc.cols) = parse_grid(c.grid);
    if (c.parsed->count("--clusters")) rc.clusters = c.clusters;
    if (c.no_mask) rc.mask = false;
    if (!c.designs.empty()) rc.designs = c.designs;
    for (auto& d : rc.designs) d = fs::absolute(d).lexically_normal().string();
    if (!rc.checkpoint.empty()) rc.checkpoint = fs::absolute(rc.checkpoint).lexically_normal().string();
    rc.out = fs::absolute(rc.out).lexically_normal().string();
    check_design_paths(rc);
    return rc;
}

void require_designs(const RunConfig& rc, const char* cmd) {
    if (rc.designs.empty()) throw ArgumentError(std::string(cmd) + ": no designs (pass paths or set 'designs' in --config)");
}

std::vector<std::shared_ptr<const EnvDesign>> prepare_all(const RunConfig& rc) {
    std::vector<std::shared_ptr<const EnvDesign>> out;
    const auto ec = rc.env();
    for (const auto& p : rc.designs) out.push_back(prepare_design(std::make_shared<const DesignBundle>(load_design(p)), ec));
    return out;
}

std::string fmt(const char* f, double v) {
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

/// Base design with its placement replaced by `pl` (for export and render).
DesignBundle with_placement(const EnvDesign& d, const Placement& reduced) {
    DesignBundle b = *d.bundle;
    b.placement = export_placement(d, reduced);
    return b;
}

int cmd_stats(const Common& c, const std::vector<std::string>& args) {
    RunConfig rc = resolve(c);
    require_designs(rc, "stats");
    std::string csv = "design,macros,std_cells,terminals,nets,utilization,max_density\n";
    std::printf("%-24s %8s %10s %9s %10s %8s %8s\n", "design", "macros", "std_cells", "terminals", "nets", "util", "max_den");
    for (const auto& p : rc.designs) {
        const auto b = load_design(p);
        const auto s = stats(b.netlist);
        const auto name = design_name(p);
        std::printf("%-24s %8zu %10zu %9zu %10zu %8.4f %8.4f\n", name.c_str(), s.macro_count, s.std_cell_count, s.terminal_count, s.net_count, s.utilization,
                    s.max_density);
        if (s.over_utilized) std::fprintf(stderr, "warning: '%s' utilization %.4f exceeds 1\n", name.c_str(), s.utilization);
        csv += csv_field(name) + "," + std::to_string(s.macro_count) + "," + std::to_string(s.std_cell_count) + "," + std::to_string(s.terminal_count) + "," +
               std::to_string(s.net_count) + "," + format_double(s.utilization) + "," + format_double(s.max_density) + "\n";
    }
    json_io::write_text_file(fs::path(rc.out) / "stats.csv", csv);
    write_manifest(rc.out, "stats", args, rc, {"stats.csv"});
    return 0;
}

int cmd_edit(const Common& c, const std::vector<std::string>& args, const std::string& name_opt, bool bookshelf_out) {
    RunConfig rc = resolve(c);
    if (rc.designs.size() != 1) throw ArgumentError("edit: exactly one design is required");
    const auto before = load_design(rc.designs[0]);
    const auto after = edit_for_movable_macros(before);
    const std::string name = name_opt.empty() ? design_name(rc.designs[0]) + "_edited" : name_opt;
    std::vector<std::string> artifacts{name + ".json"};
    json_io::write_design(after, fs::path(rc.out) / (name + ".json"));
    if (bookshelf_out) {
        bookshelf::write(after, rc.out, name);
        for (const char* ext : {".aux", ".nodes", ".nets", ".pl", ".scl"})
            if (fs::exists(fs::path(rc.out) / (name + ext))) artifacts.push_back(name + ext);
    }
    const auto s0 = stats(before.netlist), s1 = stats(after.netlist);
    int movable = 0;
    for (const auto& n : after.netlist.nodes) movable += n.kind == NodeKind::macro && n.movable ? 1 : 0;
    std::printf("%s: %zu macros (%d movable), %zu std cells, %zu blockages removed, target density %s -> %s\n", name.c_str(), s1.macro_count, movable,
                s1.std_cell_count, before.blockages.size(), format_double(s0.max_density).c_str(), format_double(s1.max_density).c_str());
    write_manifest(rc.out, "edit", args, rc, artifacts);
    return 0;
}

struct GenOptions {
    int macros = 4;
    int cells = 400;
    int nets = -1;
    double fanout = 3.0;
    std::string canvas;
    bool place_macros = false;
    std::string name;
};

int cmd_gen(const Common& c, const std::vector<std::string>& args, const GenOptions& g) {
    RunConfig rc = resolve(c);
    SyntheticSpec s;
    s.macro_count = g.macros;
    s.std_cell_count = g.cells;
    s.net_count = g.nets >= 0 ? g.nets : g.cells * 6 / 5;
    s.rent_like_fanout = g.fanout;
    s.seed = rc.seed;
    s.place_macros = g.place_macros;
    if (!g.canvas.empty()) {
        const auto x = g.canvas.find_first_of("xX");
        if (x == std::string::npos || !parse_double(std::string_view(g.canvas).substr(0, x), s.canvas_width) ||
            !parse_double(std::string_view(g.canvas).substr(x + 1), s.canvas_height))
            throw ArgumentError("--canvas must look like WxH, got '" + g.canvas + "'");
    }
    const auto b = generate_synthetic(s);
    const std::string name = g.name.empty() ? "synthetic_s" + std::to_string(rc.seed) : g.name;
    json_io::write_design(b, fs::path(rc.out) / (name + ".json"));
    const auto st = stats(b.netlist);
    std::printf("%s: %zu macros, %zu std cells, %zu nets, canvas %sx%s, target density %s\n", name.c_str(), st.macro_count, st.std_cell_count, st.net_count,
                format_double(b.netlist.canvas_width).c_str(), format_double(b.netlist.canvas_height).c_str(), format_double(st.max_density).c_str());
    write_manifest(rc.out, "gen", args, rc, {name + ".json"});
    return 0;
}

struct TrainOptions {
    int updates = -1;
    int batch = -1;
    double lr = -1.0;
    double entropy = -1.0;
    int workers = -1;
    int dim = -1;
    int rounds = -1;
};

int cmd_train(const Common& c, const std::vector<std::string>& args, const TrainOptions& o) {
    RunConfig rc = resolve(c);
    require_designs(rc, "train");
    if (o.updates >= 0) rc.train.updates = o.updates;
    if (o.batch > 0) rc.train.episodes_per_update = o.batch;
    if (o.lr > 0.0) rc.train.learning_rate = o.lr;
    if (o.entropy >= 0.0) rc.train.loss.entropy = o.entropy;
    if (o.workers > 0) rc.train.workers = o.workers;
    if (o.dim > 0) rc.train.dim = o.dim;
    if (o.rounds > 0) rc.train.rounds = o.rounds;
    const auto designs = prepare_all(rc);
    agent::Trainer trainer(designs, rc.env(), rc.train_config());
    const int every = std::max(1, rc.train.updates / 10);
    for (int u = 0; u < rc.train.updates; ++u) {
        const auto row = trainer.update(u);
        if ((u + 1) % every == 0 || u + 1 == rc.train.updates)
            std::printf("update %d/%d mean_reward %s best %s entropy %s\n", u + 1, rc.train.updates, fmt("%.5f", row.mean_reward).c_str(),
                        fmt("%.5f", row.best_reward).c_str(), fmt("%.4f", row.entropy).c_str());
    }
    const auto res = trainer.result();
    agent::save_checkpoint(res.params, fs::path(rc.out) / "checkpoint.json");
    json_io::write_text_file(fs::path(rc.out) / "curve.csv", agent::curve_csv(res.curve));
    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto t = trainer.greedy(i);
        const auto name = design_name(rc.designs[i]);
        if (t.metrics) rows.push_back(csv_row(name, rc.seed, "agent", *t.metrics));
        else rows.push_back({name, rc.seed, "agent", std::nullopt, -t.reward});
    }
    const auto csv = to_csv(rows);
    json_io::write_text_file(fs::path(rc.out) / "train.csv", csv);
    std::fputs(comparison_table(rows).c_str(), stdout);
    write_manifest(rc.out, "train", args, rc, {"checkpoint.json", "curve.csv", "train.csv"});
    return 0;
}

std::optional<agent::Params> load_params_for(const RunConfig& rc, bool required) {
    const auto p = rc.checkpoint_path();
    if (!fs::exists(p)) {
        if (!required) return std::nullopt;
        throw IoError("no checkpoint at '" + p.string() + "'; run `macroplace train` on these designs with the same --grid first, or pass --checkpoint");
    }
    return agent::load_checkpoint(p);
}

int cmd_rollout(const Common& c, const std::vector<std::string>& args, const std::string& checkpoint, bool greedy) {
    RunConfig rc = resolve(c);
    require_designs(rc, "rollout");
    if (!checkpoint.empty()) rc.checkpoint = fs::absolute(checkpoint).lexically_normal().string();
    const bool use_agent = !rc.checkpoint.empty();
    const auto params = use_agent ? load_params_for(rc, true) : std::nullopt;
    const auto designs = prepare_all(rc);
    const std::string method = use_agent ? "agent" : "random";
    std::vector<CsvRow> rows;
    std::vector<std::string> artifacts{"rollout.csv"};
    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto& d = designs[i];
        const auto name = design_name(rc.designs[i]);
        Environment env(d, rc.env());
        std::optional<agent::DesignContext> ctx;
        Policy policy = uniform_policy;
        if (params) {
            if (params->arch.rows != rc.rows || params->arch.cols != rc.cols)
                throw ArgumentError("checkpoint was trained on a " + grid_string(params->arch.rows, params->arch.cols) + " grid, run uses " +
                                    grid_string(rc.rows, rc.cols));
            ctx = agent::make_context(d);
            policy = agent::make_policy(*params, *ctx);
        }
        const auto t = rollout(env, policy, mix_seed(rc.seed, i), greedy ? ActionSelection::greedy : ActionSelection::sample);
        if (t.metrics) rows.push_back(csv_row(name, rc.seed, method, *t.metrics));
        else rows.push_back({name, rc.seed, method, std::nullopt, -t.reward});
        json_io::write_text_file(fs::path(rc.out) / "trajectories" / (name + ".json"), to_json(t, *d).dump(1) + "\n");
        artifacts.push_back("trajectories/" + name + ".json");
        if (env.outcome()) {
            json_io::write_design(with_placement(*d, env.outcome()->placement), fs::path(rc.out) / "placements" / (name + ".json"));
            artifacts.push_back("placements/" + name + ".json");
        }
    }
    const auto csv = to_csv(rows);
    json_io::write_text_file(fs::path(rc.out) / "rollout.csv", csv);
    std::fputs(csv.c_str(), stdout);
    write_manifest(rc.out, "rollout", args, rc, artifacts);
    return 0;
}

int cmd_eval(const Common& c, const std::vector<std::string>& args, const std::string& placement_file, bool flat) {
    RunConfig rc = resolve(c);
    if (rc.designs.size() != 1) throw ArgumentError("eval: exactly one design is required");
    auto bundle = load_design(rc.designs[0]);
    if (!placement_file.empty()) {
        const auto j = json_io::read_json_file(placement_file);
        if (!j.is_object() || !j.contains("positions")) throw ParseError(placement_file, 0, "missing key 'positions'");
        bundle.placement = json_io::positions_from_json(j["positions"], bundle.netlist.nodes.size(), placement_file);
    }
    const auto name = design_name(rc.designs[0]);
    const auto o = evaluate_design(bundle, rc, flat);
    for (const auto& w : o.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const Metrics& m = o.metrics;
    const auto csv = to_csv({csv_row(name, rc.seed, "eval", m)});
    json_io::write_text_file(fs::path(rc.out) / "eval.csv", csv);
    std::fputs(csv.c_str(), stdout);
    write_manifest(rc.out, "eval", args, rc, {"eval.csv"});
    return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& args, const std::vector<std::string>& methods, const std::string& checkpoint) {
    RunConfig rc = resolve(c);
    require_designs(rc, "compare");
    if (!methods.empty()) rc.methods = methods;
    if (!checkpoint.empty()) rc.checkpoint = fs::absolute(checkpoint).lexically_normal().string();
    if (rc.methods.empty()) throw ArgumentError("compare: no methods");
    const bool need_agent = std::find(rc.methods.begin(), rc.methods.end(), "agent") != rc.methods.end();
    const auto params = need_agent ? load_params_for(rc, true) : std::nullopt;
    const auto designs = prepare_all(rc);
    std::vector<CsvRow> rows;
    std::vector<std::string> artifacts{"compare.csv"};
    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto name = design_name(rc.designs[i]);
        for (const auto& m : rc.methods) {
            const auto r = run_method(m, designs[i], rc, params ? &*params : nullptr);
            rows.push_back(csv_row(name, rc.seed, m, r.metrics));
            const auto file = "placements/" + name + "_" + m + ".json";
            json_io::write_design(with_placement(*designs[i], r.placement), fs::path(rc.out) / file);
            artifacts.push_back(file);
        }
    }
    json_io::write_text_file(fs::path(rc.out) / "compare.csv", comparison_csv(rows, rc.seed));
    std::fputs(comparison_table(rows).c_str(), stdout);
    write_manifest(rc.out, "compare", args, rc, artifacts);
    return 0;
}

int cmd_render(const Common& c, const std::vector<std::string>& args, const std::string& placement_file, const std::string& name_opt) {
    RunConfig rc = resolve(c);
    if (rc.designs.size() != 1) throw ArgumentError("render: exactly one design is required");
    auto bundle = load_design(rc.designs[0]);
    if (!placement_file.empty()) {
        const auto j = json_io::read_json_file(placement_file);
        if (!j.is_object() || !j.contains("positions")) throw ParseError(placement_file, 0, "missing key 'positions'");
        bundle.placement = json_io::positions_from_json(j["positions"], bundle.netlist.nodes.size(), placement_file);
    }
    const std::string name = (name_opt.empty() ? design_name(rc.designs[0]) : name_opt) + ".svg";
    json_io::write_text_file(fs::path(rc.out) / name, render_design(bundle, rc));
    std::printf("%s\n", (fs::path(rc.out) / name).string().c_str());
    write_manifest(rc.out, "render", args, rc, {name});
    return 0;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const ArgumentError*>(&e)) return "argument";
    if (dynamic_cast<const EvaluationError*>(&e)) return "evaluation";
    if (dynamic_cast<const PlacementError*>(&e)) return "placement";
    if (dynamic_cast<const EditError*>(&e)) return "edit";
    if (dynamic_cast<const GenerationError*>(&e)) return "generation";
    if (dynamic_cast<const EnvironmentError*>(&e)) return "environment";
    if (dynamic_cast<const ContractError*>(&e)) return "contract";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    return "internal";
}

int report(const std::string& command, const std::string& kind, const std::string& message, int code, const ParseError* pe = nullptr) {
    nlohmann::json j = {{"error", kind}, {"command", command}, {"message", message}};
    if (pe) {
        j["file"] = pe->file();
        j["line"] = pe->line();
    }
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reinforcement-learning macro placement at desk scale"};
    app.require_subcommand(1);
    std::vector<std::string> args(argv + 1, argv + argc);
    Common common;

    auto* stats_cmd = app.add_subcommand("stats", "print macro / std-cell counts, utilization and max density");
    add_common(stats_cmd, common);
    stats_cmd->add_option("designs", common.designs, "design files");

    std::string edit_name;
    bool edit_bookshelf = false;
    auto* edit_cmd = app.add_subcommand("edit", "make every macro movable, drop blockages, update the target density");
    add_common(edit_cmd, common);
    edit_cmd->add_option("design", common.designs, "design file")->required();
    edit_cmd->add_option("--name", edit_name, "output name (default: <design>_edited)");
    edit_cmd->add_flag("--bookshelf", edit_bookshelf, "also write Bookshelf files");

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a seeded synthetic design");
    add_common(gen_cmd, common);
    gen_cmd->add_option("--macros", gen.macros, "macro count")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--cells", gen.cells, "std-cell count")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--nets", gen.nets, "net count (default: 1.2 x cells)");
    gen_cmd->add_option("--fanout", gen.fanout, "mean pins per net");
    gen_cmd->add_option("--canvas", gen.canvas, "canvas WxH (default: 60% utilization square)");
    gen_cmd->add_flag("--place-macros", gen.place_macros, "record original macro locations");
    gen_cmd->add_option("--name", gen.name, "output name (default: synthetic_s<seed>)");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "train the policy; writes checkpoint.json and curve.csv");
    add_common(train_cmd, common);
    train_cmd->add_option("designs", common.designs, "design files");
    train_cmd->add_option("--updates", tr.updates, "parameter updates");
    train_cmd->add_option("--batch", tr.batch, "episodes per update");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--entropy", tr.entropy, "entropy weight");
    train_cmd->add_option("--workers", tr.workers, "episode collection threads");
    train_cmd->add_option("--dim", tr.dim, "embedding width");
    train_cmd->add_option("--rounds", tr.rounds, "embedding rounds");

    std::string rollout_ckpt;
    bool rollout_greedy = false;
    auto* rollout_cmd = app.add_subcommand("rollout", "one episode per design (uniform policy unless a checkpoint is given)");
    add_common(rollout_cmd, common);
    rollout_cmd->add_option("designs", common.designs, "design files");
    rollout_cmd->add_option("--checkpoint", rollout_ckpt, "policy checkpoint");
    rollout_cmd->add_flag("--greedy", rollout_greedy, "take the most likely cell instead of sampling");

    std::string eval_placement;
    auto* eval_cmd = app.add_subcommand("eval", "metrics of a given placement");
    add_common(eval_cmd, common);
    eval_cmd->add_option("design", common.designs, "design file")->required();
    eval_cmd->add_option("--placement", eval_placement, "JSON with a 'positions' array overriding the design's")->check(CLI::ExistingFile);
    bool eval_flat = false;
    eval_cmd->add_flag("--flat", eval_flat, "score every node where it is instead of through std-cell clusters");

    std::vector<std::string> methods;
    std::string compare_ckpt;
    auto* compare_cmd = app.add_subcommand("compare", "original vs analytical-only spreading vs trained agent");
    add_common(compare_cmd, common);
    compare_cmd->add_option("designs", common.designs, "design files");
    compare_cmd->add_option("--methods", methods, "subset of original, analytical, agent, random, anneal")->delimiter(',')->check(CLI::IsMember(known_methods()));
    compare_cmd->add_option("--checkpoint", compare_ckpt, "policy checkpoint (default: <out>/checkpoint.json)");

    std::string render_placement, render_name;
    auto* render_cmd = app.add_subcommand("render", "SVG of canvas, macros, clusters and congestion");
    add_common(render_cmd, common);
    render_cmd->add_option("design", common.designs, "design file")->required();
    render_cmd->add_option("--placement", render_placement, "JSON with a 'positions' array overriding the design's")->check(CLI::ExistingFile);
    render_cmd->add_option("--name", render_name, "output name (default: <design>)");

    std::string command = argc > 1 ? argv[1] : "";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(command, "usage", e.what(), 2);
    }

    for (const auto* sc : app.get_subcommands())
        if (sc->parsed()) common.parsed = sc;
    try {
        if (stats_cmd->parsed()) return cmd_stats(common, args);
        if (edit_cmd->parsed()) return cmd_edit(common, args, edit_name, edit_bookshelf);
        if (gen_cmd->parsed()) return cmd_gen(common, args, gen);
        if (train_cmd->parsed()) return cmd_train(common, args, tr);
        if (rollout_cmd->parsed()) return cmd_rollout(common, args, rollout_ckpt, rollout_greedy);
        if (eval_cmd->parsed()) return cmd_eval(common, args, eval_placement, eval_flat);
        if (compare_cmd->parsed()) return cmd_compare(common, args, methods, compare_ckpt);
        if (render_cmd->parsed()) return cmd_render(common, args, render_placement, render_name);
    } catch (const ParseError& e) {
        return report(command, "parse", e.what(), 2, &e);
    } catch (const ArgumentError& e) {
        return report(command, "argument", e.what(), 2);
    } catch (const std::exception& e) {
        return report(command, error_kind(e), e.what(), 1);
    }
    return 0;
}
