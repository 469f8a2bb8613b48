// Acceptance run: one PASS/FAIL line per criterion.
//
//   macroplace_acceptance [--only 1,2,...]
//
// Criterion 6 checks Bookshelf exports under $MACROPLACE_ISPD2015_DIR when
// set; otherwise it writes full-size exports carrying the golden counts of
// tests/fixtures/ispd2015/counts.csv and checks those.

#include "macroplace/agent/baselines.hpp"
#include "macroplace/agent/train.hpp"
#include "macroplace/bookshelf.hpp"
#include "macroplace/placer/placer.hpp"

#include "../check_util.hpp"
#include "../cli_util.hpp"
#include "../oracles.hpp"
#include "../test_util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace macroplace;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- 1

Verdict mask_soundness() {
    Rng rng(1001);
    int masks = 0, mismatches = 0;
    while (masks < 1200) {
        const int rows = 4 + static_cast<int>(rng.below(13)), cols = 4 + static_cast<int>(rng.below(13));
        Grid g = make_grid(rng.uniform(20, 60), rng.uniform(20, 60), rows, cols);
        for (int k = 0; k < 8; ++k) {
            const bool aligned = rng.below(2) == 0;
            Node m;
            m.id = k;
            m.name = "m" + std::to_string(k);
            m.kind = NodeKind::macro;
            m.width = aligned ? g.cell_w * static_cast<double>(1 + rng.below(3)) : rng.uniform(0.3, 3.0) * g.cell_w;
            m.height = aligned ? g.cell_h * static_cast<double>(1 + rng.below(3)) : rng.uniform(0.3, 3.0) * g.cell_h;
            const auto mask = feasibility_mask(g, m);
            if (mask.feasible != oracle::mask(g, m)) ++mismatches;
            ++masks;
            if (!mask.any()) break;
            std::vector<int> cells;
            for (int c = 0; c < g.cell_count(); ++c)
                if (mask.at(c)) cells.push_back(c);
            const int c = cells[static_cast<std::size_t>(rng.below(cells.size()))];
            g = place_on_grid(g, m, c / g.cols, c % g.cols);
        }
    }

    int rollouts = 0, overlaps = 0, dead_ends = 0, violations = 0;
    for (std::uint64_t d = 0; d < 10; ++d) {
        const auto b = testutil::synthetic(1100 + d, 3 + static_cast<int>(d % 4), 200, 240);
        EnvConfig cfg;
        cfg.rows = cfg.cols = 8 + 4 * static_cast<int>(d % 3);
        cfg.clusters = 8;
        cfg.placer.engine = placer::Engine::force_directed;
        Environment env(prepare_design(b, cfg), cfg);
        for (std::uint64_t s = 0; s < 100; ++s, ++rollouts) {
            const auto t = rollout(env, uniform_policy, mix_seed(d, s));
            if (t.dead_end) {
                ++dead_ends;
                continue;
            }
            const Netlist& nl = env.design().reduced();
            const Placement& pl = env.outcome()->placement;
            std::vector<Rect> rects;
            for (const auto& n : nl.nodes)
                if (n.kind == NodeKind::macro) rects.push_back(node_rect(n, pl.at(n.id)));
            for (std::size_t i = 0; i < rects.size(); ++i)
                for (std::size_t j = i + 1; j < rects.size(); ++j) overlaps += overlap_area(rects[i], rects[j]) > 1e-9 ? 1 : 0;
            violations += placement_violations(nl, pl).empty() ? 0 : 1;
        }
    }
    return {mismatches == 0 && overlaps == 0 && violations == 0 && masks >= 1000 && rollouts >= 1000,
            std::to_string(masks) + " masks, " + std::to_string(mismatches) + " mismatches; " + std::to_string(rollouts) + " rollouts (" +
                std::to_string(dead_ends) + " dead ends), " + std::to_string(overlaps) + " overlapping pairs, " + std::to_string(violations) +
                " out-of-canvas"};
}

// ---------------------------------------------------------------- 2

struct Case {
    Netlist nl;
    Placement pl;
};

Case random_case(Rng& rng) {
    Case c;
    auto& nl = c.nl;
    nl.canvas_width = rng.uniform(20, 80);
    nl.canvas_height = rng.uniform(20, 80);
    nl.target_density = 0.05 * static_cast<double>(10 + rng.below(11));
    const int macros = static_cast<int>(rng.below(5)), cells = 5 + static_cast<int>(rng.below(60));
    for (int i = 0; i < macros; ++i) nl.add_node("m" + std::to_string(i), rng.uniform(4, 12), rng.uniform(4, 12), NodeKind::macro);
    for (int i = 0; i < cells; ++i) nl.add_node("c" + std::to_string(i), rng.uniform(0.5, 5), rng.uniform(0.5, 5), NodeKind::std_cell);
    for (int i = 0; i < 3; ++i) nl.add_node("t" + std::to_string(i), 1, 1, NodeKind::terminal);
    const int n = static_cast<int>(nl.nodes.size());
    const int nets = 5 + static_cast<int>(rng.below(80));
    for (int k = 0; k < nets; ++k) {
        std::vector<Pin> pins;
        const int deg = 1 + static_cast<int>(rng.below(6));
        for (int p = 0; p < deg; ++p) pins.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
        nl.add_net("n" + std::to_string(k), std::move(pins), rng.uniform(0.5, 2));
    }
    c.pl = Placement(nl.nodes.size());
    for (const auto& node : nl.nodes)
        c.pl.set(node.id, clamp_to_canvas(nl, node, {rng.uniform() * nl.canvas_width, rng.uniform() * nl.canvas_height}));
    return c;
}

Verdict evaluator_oracles() {
    Rng rng(2002);
    int hpwl_bad = 0, cong_bad = 0, dens_bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_case(rng);
        for (bool offsets : {false, true})
            if (hpwl(c.nl, c.pl, offsets) != oracle::hpwl(c.nl, c.pl, offsets)) ++hpwl_bad;
        const int rows = 2 + static_cast<int>(rng.below(15)), cols = 2 + static_cast<int>(rng.below(15));
        const auto m = congestion_map(c.nl, c.pl, rows, cols, 1, 1);
        const auto o = oracle::congestion(c.nl, c.pl, rows, cols);
        for (std::size_t i = 0; i < m.demand_h.size(); ++i)
            if (!oracle::close(m.demand_h[i], o.demand_h[i], 1e-6) || !oracle::close(m.demand_v[i], o.demand_v[i], 1e-6)) {
                ++cong_bad;
                break;
            }
        const double got = density_overflow(c.nl, c.pl, rows, cols, c.nl.target_density);
        if (!oracle::close(got, oracle::density_overflow(c.nl, c.pl, rows, cols, c.nl.target_density), 1e-6)) ++dens_bad;
    }
    return {hpwl_bad + cong_bad + dens_bad == 0, "100 designs; hpwl mismatches " + std::to_string(hpwl_bad) + " (exact), congestion " + std::to_string(cong_bad) +
                                                     " (1e-6), density overflow " + std::to_string(dens_bad) + " (1e-6)"};
}

// ---------------------------------------------------------------- 3

Verdict numerical_kernels() {
    using namespace placer;
    double poisson = 0.0;
    Rng rng(3003);
    for (int t = 0; t < 12; ++t) {
        const int m = 1 << (3 + t % 4);
        PoissonSolver s(m, m, rng.uniform(0.5, 2), rng.uniform(0.5, 2), PoissonSpectrum::discrete);
        std::vector<double> rho(static_cast<std::size_t>(m * m));
        for (double& v : rho) v = rng.uniform();
        poisson = std::max(poisson, poisson_residual(solve_density_field(s, rho)));
    }
    double cosine = 0.0;
    {
        const int m = 64;
        const double W = 37.0, H = 21.0;
        std::vector<double> rho(m * m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) rho[static_cast<std::size_t>(r * m + c)] = std::cos(std::numbers::pi * (c + 0.5) * (W / m) / W);
        PoissonSolver discrete(m, m, W / m, H / m, PoissonSpectrum::discrete);
        poisson = std::max(poisson, poisson_residual(solve_density_field(discrete, rho)));
        PoissonSolver continuous(m, m, W / m, H / m, PoissonSpectrum::continuous);
        const auto psi = continuous.solve(rho);
        const double scale = (W / std::numbers::pi) * (W / std::numbers::pi);
        for (std::size_t k = 0; k < psi.size(); ++k) cosine = std::max(cosine, std::abs(psi[k] - scale * rho[k]) / scale);
    }

    const auto wl_bundle = testutil::synthetic(11);
    const auto wl_cn = cluster_std_cells(wl_bundle.netlist, 16);
    const auto wl_macros = testutil::greedy_macro_placement(wl_bundle, 8, 8);
    double wl = 0.0;
    {
        const Netlist& nl = wl_cn.reduced;
        const double h = 1e-4 * nl.canvas_width;
        for (int t = 0; t < 50; ++t) {
            const Placement pl = testutil::random_reduced_placement(wl_cn, wl_macros, rng);
            const double gamma = rng.uniform(0.5, 4.0);
            const auto r = smooth_wl_and_grad(nl, pl, gamma);
            std::vector<double> analytic, numeric;
            for (const auto& node : nl.nodes)
                for (int axis = 0; axis < 2; ++axis) {
                    Placement p = pl, q = pl;
                    Point a = pl.at(node.id), b = pl.at(node.id);
                    (axis == 0 ? a.x : a.y) += h;
                    (axis == 0 ? b.x : b.y) -= h;
                    p.set(node.id, a);
                    q.set(node.id, b);
                    numeric.push_back((smooth_wl_and_grad(nl, p, gamma).value - smooth_wl_and_grad(nl, q, gamma).value) / (2 * h));
                    const Point g = r.grad[static_cast<std::size_t>(node.id)];
                    analytic.push_back(axis == 0 ? g.x : g.y);
                }
            wl = std::max(wl, checkutil::rel_err_l2(analytic, numeric));
        }
    }

    const auto d_bundle = testutil::synthetic(4);
    const auto d_cn = cluster_std_cells(d_bundle.netlist, 16);
    const auto d_macros = testutil::greedy_macro_placement(d_bundle, 8, 8);
    double density = 0.0;
    {
        const Netlist& nl = d_cn.reduced;
        const int bins = 32;
        PoissonSolver solver(bins, bins, nl.canvas_width / bins, nl.canvas_height / bins, PoissonSpectrum::discrete);
        std::vector<char> movable(nl.nodes.size(), 0);
        for (const auto& node : nl.nodes) movable[static_cast<std::size_t>(node.id)] = d_cn.is_cluster_node(node.id);
        const double h = 1e-4 * nl.canvas_width;
        for (int t = 0; t < 50; ++t) {
            auto pl = testutil::random_reduced_placement(d_cn, d_macros, rng);
            pl = checkutil::off_boundaries(nl, pl, movable, bins, 4 * h, rng);
            const auto r = density_energy_and_grad(nl, pl, movable, solver);
            std::vector<double> analytic, numeric;
            for (const auto& node : nl.nodes) {
                if (!movable[static_cast<std::size_t>(node.id)]) continue;
                for (int axis = 0; axis < 2; ++axis) {
                    Placement p = pl, q = pl;
                    Point a = pl.at(node.id), b = pl.at(node.id);
                    (axis == 0 ? a.x : a.y) += h;
                    (axis == 0 ? b.x : b.y) -= h;
                    p.set(node.id, a);
                    q.set(node.id, b);
                    numeric.push_back((solve_density_field(nl, p, solver).energy - solve_density_field(nl, q, solver).energy) / (2 * h));
                    const Point g = r.grad[static_cast<std::size_t>(node.id)];
                    analytic.push_back(axis == 0 ? g.x : g.y);
                }
            }
            density = std::max(density, checkutil::rel_err_l2(analytic, numeric));
        }
    }

    double net = 0.0;
    {
        const auto b = testutil::synthetic(21, 2, 300, 360);
        EnvConfig cfg;
        cfg.rows = cfg.cols = 6;
        cfg.clusters = 4;
        cfg.placer.engine = placer::Engine::force_directed;
        auto design = prepare_design(b, cfg);
        const auto ctx = agent::make_context(design);
        Environment env(design, cfg);
        for (int rounds : {1, 2}) {
            agent::Params p = agent::Params::init({agent::kFeatureCount, 8, rounds, 6, 6}, 9);
            for (auto& t : p.tensors)
                for (double& v : t.data) v += 0.1 * rng.normal();
            const auto batch = checkutil::frozen_batch(p, ctx, env, 3);
            net = std::max(net, checkutil::loss_gradient_error(p, ctx, batch, agent::LossWeights{0.5, 0.05}));
        }
    }

    const bool pass = poisson <= 1e-6 && cosine <= 1e-6 && wl <= 1e-4 && density <= 1e-3 && net <= 1e-4;
    return {pass, "poisson residual " + fmt("%.2e", poisson) + ", cosine eigenfunction " + fmt("%.2e", cosine) + " (<= 1e-6); wirelength grad " +
                      fmt("%.2e", wl) + " (<= 1e-4), density grad " + fmt("%.2e", density) + " (<= 1e-3) over 50 points each; policy/value grad " +
                      fmt("%.2e", net) + " (<= 1e-4)"};
}

// ---------------------------------------------------------------- 4

EnvConfig learning_env(int n) {
    EnvConfig cfg;
    cfg.rows = cfg.cols = n;
    cfg.placer.engine = placer::Engine::force_directed;
    return cfg;
}

agent::TrainConfig learning_train(std::uint64_t seed) {
    agent::TrainConfig tc;
    tc.updates = 2000;
    tc.episodes_per_update = 8;
    tc.seed = seed;
    return tc;
}

Verdict learning_sanity() {
    std::ostringstream detail;
    bool beats = true;
    const int macros[] = {3, 4, 5}, cells[] = {300, 500, 800};
    for (int d = 0; d < 3; ++d) {
        const auto b = testutil::synthetic(4000 + static_cast<std::uint64_t>(d), macros[d], cells[d], cells[d] * 6 / 5);
        const EnvConfig cfg = learning_env(16);
        auto design = prepare_design(b, cfg);
        const auto tc = learning_train(40 + static_cast<std::uint64_t>(d));
        agent::Trainer trainer({design}, cfg, tc);
        trainer.run();
        const double agent_reward = trainer.greedy(0).reward;
        Environment env(design, cfg);
        const auto random = agent::random_search(env, tc.updates * tc.episodes_per_update, mix_seed(tc.seed, 0x72616e64ULL));
        const double gain = (random.reward - agent_reward) / random.reward;
        beats = beats && gain >= 0.10;
        detail << "d" << d << " agent " << fmt("%.4f", agent_reward) << " vs random " << fmt("%.4f", random.reward) << " (" << fmt("%+.1f%%", 100 * gain) << "); ";
    }

    const auto b = testutil::synthetic(4100, 2, 200, 240);
    const EnvConfig cfg = learning_env(8);
    auto design = prepare_design(b, cfg);
    Environment env(design, cfg);
    const auto best = agent::exhaustive_oracle(env);
    agent::Trainer trainer({design}, cfg, learning_train(43));
    trainer.run();
    const double greedy = trainer.greedy(0).reward;
    const double gap = (best.reward - greedy) / std::abs(best.reward);
    const bool near = gap <= 0.05;
    detail << "fixture greedy " << fmt("%.4f", greedy) << " vs oracle " << fmt("%.4f", best.reward) << " (gap " << fmt("%.1f%%", 100 * gap) << ")";
    return {beats && near, detail.str()};
}

// ---------------------------------------------------------------- 5

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict engine_swap() {
    std::vector<double> t_fd, t_an;
    int design_wins = 0, pair_wins = 0;
    std::ostringstream detail;
    for (int d = 0; d < 4; ++d) {
        const int cells = 300 + 200 * d;
        const auto b = testutil::synthetic(5000 + static_cast<std::uint64_t>(d), 3 + d, cells, cells * 6 / 5);
        EnvConfig cfg = learning_env(16);
        auto design = prepare_design(b, cfg);
        Environment env(design, cfg);
        const Netlist& base = design->base();
        std::vector<char> movable(design->reduced().nodes.size(), 0);
        for (const auto& n : design->reduced().nodes) movable[static_cast<std::size_t>(n.id)] = design->clustered.is_cluster_node(n.id);
        double sum_fd = 0.0, sum_an = 0.0;
        for (std::uint64_t s = 1; s <= 3; ++s) {
            Trajectory t;
            for (std::uint64_t k = 0;; ++k) {
                t = rollout(env, uniform_policy, mix_seed(s, k));
                if (!t.dead_end) break;
            }
            Placement fixed = design->terminals;
            const Grid g = make_grid(base, cfg.rows, cfg.cols);
            for (std::size_t k = 0; k < t.cells.size(); ++k) {
                const Node& m = base.nodes[static_cast<std::size_t>(design->macro_order[k])];
                const int c = t.cells[k];
                fixed.set(design->reduced_id(m.id), clamp_to_canvas(base, m, g.cell_center(c / cfg.cols, c % cfg.cols)));
            }
            // The analytical run stops once it is at least as spread as the
            // force-directed result, measured on its own density bins.
            double h[2], spread = 0.0;
            for (int e = 0; e < 2; ++e) {
                placer::PlacerConfig pc;
                pc.engine = e == 0 ? placer::Engine::force_directed : placer::Engine::analytical;
                pc.seed = s;
                if (e == 1) pc.overflow_stop = spread;
                const auto t0 = Clock::now();
                const auto placed = placer::place_clusters(design->clustered, fixed, pc).placement;
                (e == 0 ? t_fd : t_an).push_back(seconds_since(t0));
                h[e] = evaluate(design->reduced(), placed, cfg.eval).hpwl;
                if (e == 0) spread = placer::bin_overflow(design->reduced(), placed, movable, pc.bins, pc.bins, design->reduced().target_density);
            }
            sum_fd += h[0];
            sum_an += h[1];
            pair_wins += h[1] <= h[0] ? 1 : 0;
        }
        design_wins += sum_an <= sum_fd ? 1 : 0;
        detail << "d" << d << " hpwl an/fd " << fmt("%.3f", sum_an / sum_fd) << "; ";
    }
    const double mf = median(t_fd), ma = median(t_an);
    detail << "analytical no worse on " << design_wins << "/4 designs (" << pair_wins << "/12 runs); median time an " << fmt("%.1f ms", 1e3 * ma) << " vs fd "
           << fmt("%.1f ms", 1e3 * mf) << " (ratio " << fmt("%.2f", ma / mf) << ", limit 1.5)";
    return {design_wins >= 3 && ma <= 1.5 * mf, detail.str()};
}

// ---------------------------------------------------------------- 6

struct GoldenRow {
    std::string design;
    std::size_t macros = 0, std_cells = 0;
    double utilization = 0.0, max_density = 0.0;
};

std::vector<GoldenRow> golden_table() {
    std::istringstream in(cliutil::slurp(fs::path(MACROPLACE_FIXTURES) / "ispd2015" / "counts.csv"));
    std::vector<GoldenRow> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        GoldenRow r;
        std::string f;
        std::getline(ss, r.design, ',');
        std::getline(ss, f, ',');
        r.macros = std::stoul(f);
        std::getline(ss, f, ',');
        r.std_cells = std::stoul(f);
        std::getline(ss, f, ',');
        r.utilization = std::stod(f);
        std::getline(ss, f, ',');
        r.max_density = std::stod(f);
        rows.push_back(r);
    }
    return rows;
}

/// Bookshelf export with the golden macro and std-cell counts at the golden utilization.
fs::path write_golden_export(const GoldenRow& g, const fs::path& dir) {
    Rng rng(fnv1a(g.design));
    Netlist nl;
    std::vector<int> macros, cells, pins;
    double area = 0.0;
    for (std::size_t i = 0; i < g.macros; ++i) {
        macros.push_back(nl.add_node("m" + std::to_string(i), rng.uniform(40, 120), rng.uniform(40, 120), NodeKind::macro));
        area += nl.nodes.back().area();
    }
    for (std::size_t i = 0; i < g.std_cells; ++i) {
        cells.push_back(nl.add_node("c" + std::to_string(i), static_cast<double>(1 + rng.below(4)), 1.0, NodeKind::std_cell));
        area += nl.nodes.back().area();
    }
    for (int i = 0; i < 64; ++i) pins.push_back(nl.add_node("p" + std::to_string(i), 0, 0, NodeKind::terminal));
    nl.canvas_width = nl.canvas_height = std::ceil(std::sqrt(area / g.utilization));
    nl.target_density = g.max_density;
    for (std::size_t i = 0; i + 1 < cells.size(); i += 2) {
        std::vector<Pin> net{{cells[i], 0, 0}, {cells[i + 1], 0, 0}};
        if (i % 64 == 0) net.push_back({macros[(i / 64) % macros.size()], 0, 0});
        if (i % 1000 == 0) net.push_back({pins[(i / 1000) % pins.size()], 0, 0});
        nl.add_net("n" + std::to_string(i / 2), std::move(net));
    }
    auto b = make_bundle(std::move(nl));
    for (const auto& n : b.netlist.nodes)
        b.placement.set(n.id, clamp_to_canvas(b.netlist, n, {rng.uniform() * b.netlist.canvas_width, rng.uniform() * b.netlist.canvas_height}));
    const auto files = bookshelf::write(b, dir, g.design);
    return files.nodes.parent_path() / (g.design + ".aux");
}

std::optional<fs::path> find_export(const fs::path& root, const std::string& name) {
    for (const auto& p : {root / name / (name + ".aux"), root / (name + ".aux"), root / name / (name + "_edited.aux"), root / (name + "_edited.aux")})
        if (fs::exists(p)) return p;
    return std::nullopt;
}

Verdict benchmark_statistics() {
    const auto golden = golden_table();
    const char* env_dir = std::getenv("MACROPLACE_ISPD2015_DIR");
    const auto work = cliutil::scratch("acceptance_stats");
    std::string source;
    std::vector<fs::path> inputs;
    if (env_dir && *env_dir) {
        source = std::string("exports in ") + env_dir;
        for (const auto& g : golden) {
            const auto p = find_export(env_dir, g.design);
            if (!p) return {false, "no Bookshelf export for " + g.design + " under " + env_dir};
            inputs.push_back(*p);
        }
    } else {
        source = "golden fixtures (MACROPLACE_ISPD2015_DIR unset)";
        for (const auto& g : golden) inputs.push_back(write_golden_export(g, work / "exports"));
    }
    std::string args = "stats";
    for (const auto& p : inputs) args += " '" + p.string() + "'";
    const auto r = cliutil::run(MACROPLACE_CLI, args + " --out out", work);
    if (r.code != 0) return {false, "stats exited " + std::to_string(r.code) + ": " + r.err};

    std::map<std::string, std::pair<std::size_t, std::size_t>> got;
    std::istringstream csv(cliutil::slurp(work / "out" / "stats.csv"));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string name, m, c;
        std::getline(ss, name, ',');
        std::getline(ss, m, ',');
        std::getline(ss, c, ',');
        if (name.size() > 7 && name.ends_with("_edited")) name.resize(name.size() - 7);
        got[name] = {std::stoul(m), std::stoul(c)};
    }
    int exact = 0;
    std::string misses;
    for (const auto& g : golden) {
        const auto it = got.find(g.design);
        if (it != got.end() && it->second == std::pair{g.macros, g.std_cells}) {
            ++exact;
            continue;
        }
        misses += " " + g.design;
        if (it != got.end()) misses += "=" + std::to_string(it->second.first) + "/" + std::to_string(it->second.second);
    }
    return {exact == static_cast<int>(golden.size()),
            source + ": " + std::to_string(exact) + "/" + std::to_string(golden.size()) + " designs exact" + (misses.empty() ? "" : ", mismatched:" + misses)};
}

// ---------------------------------------------------------------- 7

std::vector<std::string> command_script(const std::string& p) {
    const std::string fx = MACROPLACE_FIXTURES;
    const std::string design = p + "/gen/synthetic_s11.json";
    const std::string ckpt = p + "/train/checkpoint.json";
    return {
        "gen --seed 11 --macros 3 --cells 300 --place-macros --out " + p + "/gen",
        "stats " + design + " '" + fx + "/tiny/tiny.aux' --out " + p + "/stats",
        "edit '" + fx + "/tiny/tiny.aux' --bookshelf --out " + p + "/edit",
        "train " + design + " --engine fd --grid 8x8 --updates 6 --batch 4 --workers 2 --seed 5 --out " + p + "/train",
        "rollout " + design + " --checkpoint " + ckpt + " --greedy --engine fd --grid 8x8 --seed 5 --out " + p + "/rollout",
        "rollout " + design + " --engine analytical --clusters 12 --seed 5 --out " + p + "/rollout_uniform",
        "eval " + p + "/rollout/placements/synthetic_s11.json --engine fd --out " + p + "/eval",
        "compare " + design + " --engine fd --grid 8x8 --checkpoint " + ckpt + " --methods original,analytical,agent,random,anneal --seed 5 --out " + p + "/compare",
        "render " + p + "/rollout/placements/synthetic_s11.json --out " + p + "/render",
    };
}

std::map<std::string, std::string> outputs(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files[fs::relative(e.path(), root).string()] = cliutil::slurp(e.path());
    return files;
}

Verdict determinism() {
    const auto work = cliutil::scratch("acceptance_determinism");
    for (const std::string p : {"a", "b"})
        for (const auto& cmd : command_script(p)) {
            const auto r = cliutil::run(MACROPLACE_CLI, cmd, work);
            if (r.code != 0) return {false, "'" + cmd + "' exited " + std::to_string(r.code) + ": " + r.err};
        }
    const auto a = outputs(work / "a"), b = outputs(work / "b");
    int csvs = 0, identical = 0;
    std::string differ;
    for (const auto& [name, body] : a) {
        const auto it = b.find(name);
        const bool same = it != b.end() && it->second == body;
        if (name.ends_with(".csv")) ++csvs;
        if (same) ++identical;
        else differ += " " + name;
    }
    const bool pass = differ.empty() && a.size() == b.size() && csvs >= 7;
    return {pass, std::to_string(command_script("a").size()) + " commands run twice; " + std::to_string(identical) + "/" + std::to_string(a.size()) +
                      " outputs bitwise identical (" + std::to_string(csvs) + " CSV)" + (differ.empty() ? "" : "; differing:" + differ)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
    /// Wall-clock budget in seconds; 0 means none.
    double budget = 0.0;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("macroplace acceptance run");
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 7));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "mask soundness", mask_soundness, 60},
        {2, "evaluator oracles", evaluator_oracles, 60},
        {3, "numerical kernels", numerical_kernels, 300},
        {4, "learning sanity", learning_sanity, 1800},
        {5, "engine swap", engine_swap},
        {6, "benchmark statistics", benchmark_statistics, 60},
        {7, "determinism", determinism},
    };
    const std::set<int> selected(only.begin(), only.end());
    bool all = true;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = seconds_since(t0);
        if (c.budget > 0 && elapsed > c.budget) {
            v.pass = false;
            v.detail += "; over the " + fmt("%.0f s", c.budget) + " budget";
        }
        all = all && v.pass;
        std::printf("criterion %d %s: %s: %s [%.1f s]\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), elapsed);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
