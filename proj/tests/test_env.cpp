#include "macroplace/env.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace macroplace;

namespace {

EnvConfig small_config(int n = 8, placer::Engine engine = placer::Engine::force_directed) {
    EnvConfig c;
    c.rows = c.cols = n;
    c.placer.engine = engine;
    c.placer.bins = 16;
    return c;
}

/// Macros with the given (w, h) on a canvas, one std cell and a net touching everything.
DesignBundle handmade(double cw, double ch, const std::vector<std::pair<double, double>>& macros) {
    Netlist nl;
    nl.canvas_width = cw;
    nl.canvas_height = ch;
    std::vector<Pin> pins;
    for (std::size_t i = 0; i < macros.size(); ++i) {
        const int id = nl.add_node("m" + std::to_string(i), macros[i].first, macros[i].second, NodeKind::macro);
        pins.push_back({id, 0, 0});
    }
    const int s = nl.add_node("s0", 0.2, 0.2, NodeKind::std_cell);
    const int p = nl.add_node("p0", 0, 0, NodeKind::terminal);
    pins.push_back({s, 0, 0});
    pins.push_back({p, 0, 0});
    nl.add_net("n0", pins);
    DesignBundle b = make_bundle(std::move(nl));
    b.placement.set(p, {0.0, 0.0});
    return b;
}

Environment make_env(const DesignBundle& b, const EnvConfig& cfg, std::shared_ptr<OutcomeCache> cache = nullptr) {
    return Environment(prepare_design(b, cfg), cfg, std::move(cache));
}

/// Plays `actions` in order regardless of the observation.
Policy scripted(std::vector<int> actions, int cells) {
    return [actions = std::move(actions), cells](const Observation& obs) {
        PolicyOutput out;
        out.probs.assign(static_cast<std::size_t>(cells), 0.0);
        out.probs[static_cast<std::size_t>(actions[static_cast<std::size_t>(obs.step)])] = 1.0;
        return out;
    };
}

std::vector<Rect> macro_rects(const EnvDesign& d, const Placement& reduced) {
    std::vector<Rect> rects;
    for (int id : d.macro_order) rects.push_back(node_rect(d.base().nodes[static_cast<std::size_t>(id)], reduced.at(d.reduced_id(id))));
    return rects;
}

}  // namespace

TEST(MacroOrder, AreaDescending) {
    const auto b = handmade(20, 20, {{1, 1}, {3, 3}, {2, 2}});
    EXPECT_EQ(macro_order(b.netlist, MacroOrder::area_descending), (std::vector<int>{1, 2, 0}));
}

TEST(MacroOrder, TiesBreakByAscendingId) {
    Netlist nl;
    nl.canvas_width = nl.canvas_height = 10;
    for (int i = 0; i < 6; ++i) nl.add_node("n" + std::to_string(i), 1, 1, i == 2 || i == 5 ? NodeKind::macro : NodeKind::std_cell);
    nl.nodes[5].width = nl.nodes[2].width = 2;
    EXPECT_EQ(macro_order(nl, MacroOrder::area_descending), (std::vector<int>{2, 5}));
}

TEST(MacroOrder, IdOrderOption) {
    const auto b = handmade(20, 20, {{1, 1}, {3, 3}, {2, 2}});
    EXPECT_EQ(macro_order(b.netlist, MacroOrder::id), (std::vector<int>{0, 1, 2}));
}

TEST(Env, ZeroMacrosRejected) {
    const auto b = handmade(10, 10, {});
    EXPECT_THROW(prepare_design(b, small_config()), EnvironmentError);
}

TEST(Env, UnplacedTerminalRejected) {
    auto b = handmade(10, 10, {{2, 2}});
    b.placement.unset(2);
    EXPECT_THROW(prepare_design(b, small_config()), EnvironmentError);
}

TEST(Env, ResetTwiceGivesIdenticalObservations) {
    const auto b = testutil::synthetic(3, 3, 200, 240);
    auto env = make_env(b, small_config());
    const Observation first = env.reset();
    env.step(argmax_index(uniform_policy(first).probs));
    const Observation second = env.reset();
    EXPECT_EQ(first.digest(), second.digest());
    EXPECT_EQ(first.mask, second.mask);
    EXPECT_EQ(first.placed, second.placed);
    EXPECT_EQ(first.macro, second.macro);
    EXPECT_EQ(second.step, 0);
}

TEST(Env, SingleMacroDesignTakesOneStep) {
    const auto b = testutil::synthetic(5, 1, 150, 180);
    auto env = make_env(b, small_config());
    const auto r = env.step(argmax_index(uniform_policy(env.observation()).probs));
    EXPECT_TRUE(r.done);
    EXPECT_FALSE(r.dead_end);
    ASSERT_TRUE(r.metrics.has_value());
    EXPECT_TRUE(std::isfinite(r.reward));
    EXPECT_EQ(r.reward, -r.metrics->proxy_cost);
}

TEST(Env, IntermediateRewardsAreZero) {
    const auto b = testutil::synthetic(6, 4, 200, 240);
    auto env = make_env(b, small_config(16));
    Rng rng(1);
    while (!env.done()) {
        const auto r = env.step(sample_index(uniform_policy(env.observation()).probs, rng));
        if (!r.done) {
            EXPECT_EQ(r.reward, 0.0);
        }
    }
}

TEST(Env, BlockingFirstMacroEndsWithPenalty) {
    // A 3x3 macro on a 3x3 canvas fits only at the center cell and covers the grid.
    const auto b = handmade(3, 3, {{3, 3}, {1, 1}});
    const EnvConfig cfg = small_config(3);
    auto env = make_env(b, cfg);
    const Mask first = env.observation().mask;
    ASSERT_EQ(first.count(), 1);
    ASSERT_TRUE(first.at(1, 1));
    Grid g = make_grid(b.netlist, 3, 3);
    g = place_on_grid(g, b.netlist.nodes[0], 1, 1);
    const auto second = oracle::mask(g, b.netlist.nodes[1]);
    ASSERT_EQ(std::count(second.begin(), second.end(), 1), 0);

    const auto r = env.step(4);
    EXPECT_TRUE(r.done);
    EXPECT_TRUE(r.dead_end);
    EXPECT_EQ(r.reward, -2.0);
    EXPECT_FALSE(r.metrics.has_value());
    EXPECT_THROW(env.step(0), ContractError);
}

TEST(Env, UnplaceableFirstMacroEndsAtReset) {
    const auto b = handmade(4, 4, {{4, 4}});
    auto env = make_env(b, small_config(4));
    EXPECT_TRUE(env.done());
    EXPECT_EQ(env.reward(), -2.0);
    const auto t = rollout(env, uniform_policy, 1);
    EXPECT_TRUE(t.steps.empty());
    EXPECT_TRUE(t.dead_end);
}

TEST(Env, PenaltyIsConfigurable) {
    const auto b = handmade(3, 3, {{3, 3}, {1, 1}});
    EnvConfig cfg = small_config(3);
    cfg.dead_end_penalty = 5.0;
    auto env = make_env(b, cfg);
    EXPECT_EQ(env.step(4).reward, -5.0);
}

TEST(Env, MaskedActionIsContractViolation) {
    const auto b = testutil::synthetic(7, 2, 150, 180);
    auto env = make_env(b, small_config());
    const Mask& m = env.observation().mask;
    int a = 0;
    while (a < m.rows * m.cols && m.at(a)) ++a;
    ASSERT_LT(a, m.rows * m.cols) << "fixture should have a masked cell";
    EXPECT_THROW(env.step(a), ContractError);
    EXPECT_THROW(env.step(-1), ContractError);
    EXPECT_THROW(env.step(64), ContractError);
}

TEST(Env, NoMaskOffersEveryCellAndPenalizesBadPicks) {
    const auto b = testutil::synthetic(7, 2, 150, 180);
    EnvConfig cfg = small_config();
    cfg.mask = false;
    auto env = make_env(b, cfg);
    EXPECT_EQ(env.observation().mask.count(), 64);
    int a = 0;
    while (env.true_mask().at(a)) ++a;
    const auto r = env.step(a);
    EXPECT_TRUE(r.done);
    EXPECT_TRUE(r.dead_end);
    EXPECT_EQ(r.reward, -2.0);
}

TEST(Env, SameActionsGiveBitwiseIdenticalRewards) {
    const auto b = testutil::synthetic(11, 4, 300, 360);
    for (auto engine : {placer::Engine::force_directed, placer::Engine::analytical}) {
        const EnvConfig cfg = small_config(16, engine);
        auto e1 = make_env(b, cfg);
        const auto t1 = rollout(e1, uniform_policy, 42);
        auto e2 = make_env(b, cfg);
        const auto t2 = rollout(e2, scripted(t1.cells, 256), 0, ActionSelection::greedy);
        EXPECT_EQ(t1.cells, t2.cells);
        EXPECT_EQ(std::memcmp(&t1.reward, &t2.reward, sizeof(double)), 0);
        EXPECT_EQ(t1.metrics, t2.metrics);
    }
}

TEST(Env, CacheReturnsTheUncachedOutcome) {
    const auto b = testutil::synthetic(12, 3, 200, 240);
    const EnvConfig cfg = small_config();
    auto cache = std::make_shared<OutcomeCache>();
    auto cached = make_env(b, cfg, cache);
    auto plain = make_env(b, cfg);
    const auto t = rollout(cached, uniform_policy, 9);
    const auto again = rollout(cached, uniform_policy, 9);
    const auto fresh = rollout(plain, uniform_policy, 9);
    EXPECT_EQ(cache->size(), 1u);
    EXPECT_EQ(cache->hits(), 1u);
    EXPECT_EQ(t.reward, again.reward);
    EXPECT_EQ(t.reward, fresh.reward);
}

TEST(Rollout, UniformPolicyOnTwoMacrosHasTwoSteps) {
    const auto b = testutil::synthetic(13, 2, 150, 180);
    auto env = make_env(b, small_config());
    const auto t = rollout(env, uniform_policy, 3);
    ASSERT_EQ(t.steps.size(), 2u);
    for (const auto& s : t.steps) {
        EXPECT_TRUE(s.mask[static_cast<std::size_t>(s.action)]);
        EXPECT_TRUE(std::isfinite(s.log_prob));
        EXPECT_LE(s.log_prob, 0.0);
    }
    EXPECT_NE(t.steps[0].digest, t.steps[1].digest);
    ASSERT_TRUE(t.metrics.has_value());
    EXPECT_EQ(t.reward, t.metrics->reward());
}

TEST(Rollout, SeedsDriveSampling) {
    const auto b = testutil::synthetic(14, 3, 150, 180);
    auto env = make_env(b, small_config(16));
    std::set<std::vector<int>> seen;
    for (std::uint64_t s = 0; s < 10; ++s) seen.insert(rollout(env, uniform_policy, s).cells);
    EXPECT_GT(seen.size(), 5u);
    EXPECT_EQ(rollout(env, uniform_policy, 4).cells, rollout(env, uniform_policy, 4).cells);
}

TEST(Rollout, WrongSizedPolicyOutputIsRejected) {
    const auto b = testutil::synthetic(15, 1, 100, 120);
    auto env = make_env(b, small_config());
    EXPECT_THROW(rollout(env, [](const Observation&) { return PolicyOutput{{1.0}, 0.0}; }, 1), ContractError);
}

TEST(Rollout, RewardSetMatchesExhaustiveEnumeration) {
    // Two macros on a 4x4 grid: every masked action sequence, found by a DFS
    // over the raster mask, then replayed through scripted rollouts.
    const auto b = testutil::synthetic(16, 2, 120, 150);
    const EnvConfig cfg = small_config(4);
    auto design = prepare_design(b, cfg);
    const Netlist& nl = b.netlist;
    std::vector<std::vector<int>> sequences;
    std::vector<int> prefix;
    std::function<void(const Grid&, std::size_t)> dfs = [&](const Grid& g, std::size_t k) {
        if (k == design->macro_order.size()) {
            sequences.push_back(prefix);
            return;
        }
        const Node& m = nl.nodes[static_cast<std::size_t>(design->macro_order[k])];
        const auto mask = oracle::mask(g, m);
        for (int c = 0; c < g.cell_count(); ++c) {
            if (!mask[static_cast<std::size_t>(c)]) continue;
            prefix.push_back(c);
            dfs(place_on_grid(g, m, c / g.cols, c % g.cols), k + 1);
            prefix.pop_back();
        }
    };
    dfs(make_grid(nl, 4, 4), 0);
    ASSERT_GT(sequences.size(), 10u);

    // Independent terminal evaluation: macros at clamped cell centers.
    std::multiset<double> expected;
    for (const auto& seq : sequences) {
        Placement fixed = design->terminals;
        const Grid g = make_grid(nl, 4, 4);
        for (std::size_t k = 0; k < seq.size(); ++k) {
            const Node& m = nl.nodes[static_cast<std::size_t>(design->macro_order[k])];
            fixed.set(design->reduced_id(m.id), clamp_to_canvas(nl, m, g.cell_center(seq[k] / 4, seq[k] % 4)));
        }
        const auto placed = placer::place_clusters(design->clustered, fixed, cfg.placer).placement;
        expected.insert(-evaluate(design->reduced(), placed, cfg.eval).proxy_cost);
    }

    Environment env(design, cfg);
    std::multiset<double> achieved;
    for (const auto& seq : sequences) achieved.insert(rollout(env, scripted(seq, 16), 0, ActionSelection::greedy).reward);
    EXPECT_EQ(achieved, expected);
}

TEST(Rollout, RandomRolloutsNeverOverlapMacros) {
    int rollouts = 0;
    for (std::uint64_t d = 0; d < 5; ++d) {
        const auto b = testutil::synthetic(100 + d, 3 + static_cast<int>(d % 4), 200, 240);
        const EnvConfig cfg = small_config(8 + 4 * static_cast<int>(d % 3));
        auto env = make_env(b, cfg);
        for (std::uint64_t s = 0; s < 40; ++s, ++rollouts) {
            const auto t = rollout(env, uniform_policy, s);
            if (t.dead_end) continue;
            const auto rects = macro_rects(env.design(), env.outcome()->placement);
            for (std::size_t i = 0; i < rects.size(); ++i)
                for (std::size_t j = i + 1; j < rects.size(); ++j) ASSERT_LE(overlap_area(rects[i], rects[j]), 1e-9) << "design " << d << " seed " << s;
            EXPECT_TRUE(placement_violations(env.design().reduced(), env.outcome()->placement).empty());
        }
    }
    EXPECT_EQ(rollouts, 200);
}

TEST(Rollout, EngineSwapKeepsMasksAndLegality) {
    const auto b = testutil::synthetic(17, 5, 300, 360);
    auto fd = make_env(b, small_config(16, placer::Engine::force_directed));
    auto an = make_env(b, small_config(16, placer::Engine::analytical));
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t1 = rollout(fd, uniform_policy, s);
        const auto t2 = rollout(an, scripted(t1.cells, 256), 0, ActionSelection::greedy);
        ASSERT_EQ(t1.steps.size(), t2.steps.size());
        for (std::size_t k = 0; k < t1.steps.size(); ++k) {
            EXPECT_EQ(t1.steps[k].mask, t2.steps[k].mask);
            EXPECT_EQ(t1.steps[k].digest, t2.steps[k].digest);
        }
        EXPECT_EQ(t1.dead_end, t2.dead_end);
    }
}

TEST(Rollout, JsonDumpListsEveryStep) {
    const auto b = testutil::synthetic(18, 2, 150, 180);
    auto env = make_env(b, small_config());
    const auto t = rollout(env, uniform_policy, 5);
    const auto j = to_json(t, env.design());
    ASSERT_EQ(j["steps"].size(), 2u);
    EXPECT_EQ(j["steps"][0]["mask"].get<std::string>().size(), 64u);
    EXPECT_EQ(j["steps"][1]["action"].get<int>(), t.cells[1]);
    EXPECT_EQ(j["reward"].get<double>(), t.reward);
    EXPECT_TRUE(j["metrics"].contains("proxy_cost"));
}

TEST(Sampling, ZeroProbabilityCellsAreNeverDrawn) {
    Rng rng(2);
    const std::vector<double> p{0.0, 0.5, 0.0, 0.5, 0.0};
    for (int i = 0; i < 500; ++i) {
        const int a = sample_index(p, rng);
        EXPECT_TRUE(a == 1 || a == 3);
    }
    EXPECT_THROW(sample_index(std::vector<double>(3, 0.0), rng), ContractError);
    EXPECT_EQ(argmax_index({0.1, 0.4, 0.4, 0.1}), 1);
}
