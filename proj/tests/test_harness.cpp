#include "macroplace/harness.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace macroplace;
using namespace macroplace::harness;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("macroplace_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') out.push_back(cur), cur.clear();
        else cur += c;
    }
    out.push_back(cur);
    return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

Metrics metrics(double hpwl, double extra = 0.0) {
    Metrics m;
    m.hpwl = hpwl;
    m.cong_h = 0.1 + extra;
    m.cong_v = 0.2;
    m.density_overflow = 0.3;
    m.proxy_cost = 0.4 + extra;
    return m;
}

RunConfig fd_config() {
    RunConfig rc;
    rc.rows = rc.cols = 8;
    rc.placer.engine = placer::Engine::force_directed;
    rc.placer.bins = 32;
    return rc;
}

}  // namespace

TEST(Grid, ParsesRowsByCols) {
    EXPECT_EQ(parse_grid("16x8"), std::make_pair(16, 8));
    EXPECT_EQ(parse_grid("4X4"), std::make_pair(4, 4));
    for (const char* bad : {"16", "x8", "0x4", "4x-1", "axb", "4x4x4"}) EXPECT_THROW(parse_grid(bad), ArgumentError) << bad;
}

TEST(Config, DefaultsRoundTrip) {
    RunConfig rc;
    rc.designs = {"/abs/a.json"};
    rc.placer.engine = placer::Engine::force_directed;
    rc.train.updates = 7;
    rc.methods = {"agent", "random"};
    const auto j = config_to_json(rc);
    EXPECT_EQ(config_to_json(config_from_json(j, "cfg")), j);
}

TEST(Config, UnknownKeysAreRejectedWithPathAndKey) {
    try {
        config_from_json({{"seeed", 3}}, "run.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.file(), "run.json");
        EXPECT_NE(std::string(e.what()).find("seeed"), std::string::npos);
    }
    try {
        config_from_json({{"placer", {{"engin", "fd"}}}}, "run.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.file(), "run.json:placer");
        EXPECT_NE(std::string(e.what()).find("engin"), std::string::npos);
    }
}

TEST(Config, BadValuesAreRejected) {
    EXPECT_THROW(config_from_json({{"grid", "16"}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"placer", {{"engine", "magic"}}}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"placer", {{"bins", 48}}}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"methods", {"agent", "oracle"}}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"train", {{"episodes_per_update", 0}}}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"eval", {{"weights", {{"hpwl", -1.0}}}}}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"seed", "one"}}, "c"), ParseError);
    EXPECT_THROW(config_from_json({{"version", 2}}, "c"), ParseError);
}

TEST(Config, RelativePathsResolveAgainstTheConfigFile) {
    const auto rc = config_from_json({{"designs", {"d/a.json", "/x/b.json"}}, {"checkpoint", "../c.json"}, {"out", "runs/o"}}, "c", "/base/cfg");
    EXPECT_EQ(rc.designs[0], "/base/cfg/d/a.json");
    EXPECT_EQ(rc.designs[1], "/x/b.json");
    EXPECT_EQ(rc.checkpoint, "/base/c.json");
    EXPECT_EQ(rc.out, "/base/cfg/runs/o");
}

TEST(Config, MissingDesignPathIsReported) {
    RunConfig rc;
    rc.designs = {"/no/such/design.json"};
    try {
        check_design_paths(rc);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/no/such/design.json"), std::string::npos);
    }
}

TEST(Config, ManifestReloadsTheSameConfig) {
    const auto dir = scratch("manifest");
    RunConfig rc;
    rc.seed = 42;
    rc.out = dir.string();
    rc.train.learning_rate = 0.02;
    write_manifest(dir, "train", {"train", "x"}, rc, {"b.csv", "a.csv"});
    const auto j = json_io::read_json_file(dir / "manifest.json");
    EXPECT_EQ(j["seed"], 42);
    EXPECT_EQ(j["config_hash"], config_hash(rc));
    EXPECT_EQ(j["artifacts"], nlohmann::json({"a.csv", "b.csv"}));
    EXPECT_EQ(config_hash(load_config(dir / "manifest.json")), config_hash(rc));
}

TEST(Config, HashTracksEveryField) {
    RunConfig a, b;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    b = a;
    b.placer.gamma_decay = 0.7;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Csv, HeaderMatchesTheDocumentedSchema) {
    const auto csv = to_csv({csv_row("d", 1, "agent", metrics(10.0))});
    EXPECT_EQ(lines(csv)[0], "design,seed,method,hpwl,cong_h,cong_v,density_overflow,proxy_cost");
    EXPECT_EQ(split(lines(csv)[1]).size(), 8u);
}

TEST(Csv, IdenticalPlacementsGiveIdenticalRowsAndUnitRatios) {
    const auto m = metrics(123.5);
    const std::vector<CsvRow> rows{csv_row("d", 3, "a", m), csv_row("d", 3, "b", m)};
    const auto l = lines(comparison_csv(rows, 3));
    ASSERT_EQ(l.size(), 5u);
    EXPECT_EQ(l[1].substr(l[1].find(",a,") + 3), l[2].substr(l[2].find(",b,") + 3));
    EXPECT_EQ(l[3], "ratio,3,a,1,,,,");
    EXPECT_EQ(l[4], "ratio,3,b,1,,,,");
}

TEST(Csv, RatioRowIsMeanHpwlOverBestMethodMean) {
    Rng rng(5);
    std::vector<CsvRow> rows;
    const std::vector<std::string> methods{"original", "analytical", "agent"};
    for (int d = 0; d < 4; ++d)
        for (const auto& m : methods) rows.push_back(csv_row("d" + std::to_string(d), 1, m, metrics(rng.uniform(100.0, 200.0))));
    const auto l = lines(comparison_csv(rows, 1));
    std::map<std::string, double> sum;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
        const auto f = split(l[i]);
        double v = 0.0;
        ASSERT_TRUE(parse_double(f[3], v));
        sum[f[2]] += v;
    }
    double best = 1e300;
    for (auto& [m, s] : sum) best = std::min(best, s / 4.0);
    for (std::size_t k = 0; k < methods.size(); ++k) {
        const auto f = split(l[rows.size() + 1 + k]);
        EXPECT_EQ(f[0], "ratio");
        EXPECT_EQ(f[2], methods[k]);
        double v = 0.0;
        ASSERT_TRUE(parse_double(f[3], v));
        EXPECT_NEAR(v, sum[methods[k]] / 4.0 / best, 1e-12);
    }
}

TEST(Csv, DeadEndRowLeavesMetricsEmpty) {
    const auto l = lines(to_csv({CsvRow{"d", 1, "random", std::nullopt, 2.0}}));
    EXPECT_EQ(l[1], "d,1,random,,,,,2");
}

TEST(Csv, QuotesFieldsWithCommas) { EXPECT_EQ(csv_field("a,b\"c"), "\"a,b\"\"c\""); }

TEST(Methods, OriginalUsesTheDesignsMacroLocations) {
    SyntheticSpec s;
    s.seed = 11;
    s.macro_count = 3;
    s.std_cell_count = 300;
    s.net_count = 360;
    s.place_macros = true;
    const auto rc = fd_config();
    const auto d = prepare_design(generate_synthetic(s), rc.env());
    const auto r = run_method("original", d, rc, nullptr);
    for (int id : d->macro_order) EXPECT_EQ(r.placement.at(d->reduced_id(id)), d->bundle->placement.at(id));
    EXPECT_TRUE(std::isfinite(r.metrics.proxy_cost));
    EXPECT_EQ(r.metrics, evaluate(d->reduced(), r.placement, rc.eval));
}

TEST(Methods, OriginalWithoutLocationsNamesTheRemedy) {
    const auto rc = fd_config();
    const auto d = prepare_design(testutil::synthetic(12, 2), rc.env());
    try {
        run_method("original", d, rc, nullptr);
        FAIL();
    } catch (const EnvironmentError& e) {
        EXPECT_NE(std::string(e.what()).find("--place-macros"), std::string::npos);
    }
}

TEST(Methods, AnalyticalSpreadingIsLegalOnTheGrid) {
    const auto rc = fd_config();
    for (std::uint64_t seed : {13u, 14u, 15u}) {
        const auto d = prepare_design(testutil::synthetic(seed, 4), rc.env());
        const auto cells = analytical_spread_cells(*d, rc.env());
        ASSERT_EQ(cells.size(), d->macro_order.size());
        Grid g = make_grid(d->base(), rc.rows, rc.cols);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const Node& m = d->base().nodes[static_cast<std::size_t>(d->macro_order[k])];
            ASSERT_TRUE(feasibility_mask(g, m).at(cells[k])) << "seed " << seed << " macro " << k;
            g = place_on_grid(std::move(g), m, cells[k] / rc.cols, cells[k] % rc.cols);
        }
        const auto r = run_method("analytical", d, rc, nullptr);
        EXPECT_EQ(r.cells, cells);
    }
}

TEST(Methods, AgentChecksTheCheckpointGrid) {
    const auto rc = fd_config();
    const auto d = prepare_design(testutil::synthetic(16, 2), rc.env());
    const auto p = agent::Params::init({agent::kFeatureCount, 8, 1, 4, 4}, 1);
    EXPECT_THROW(run_method("agent", d, rc, &p), ArgumentError);
    EXPECT_THROW(run_method("agent", d, rc, nullptr), ArgumentError);
    const auto q = agent::Params::init({agent::kFeatureCount, 8, 1, 8, 8}, 1);
    const auto r = run_method("agent", d, rc, &q);
    EXPECT_EQ(r.cells.size(), 2u);
}

TEST(Methods, RandomAndAnnealUseTheTrainingBudget) {
    auto rc = fd_config();
    rc.train.updates = 3;
    rc.train.episodes_per_update = 4;
    const auto d = prepare_design(testutil::synthetic(17, 2), rc.env());
    Environment env(d, rc.env());
    const auto expect = agent::random_search(env, 12, rc.seed);
    EXPECT_EQ(run_method("random", d, rc, nullptr).cells, expect.cells);
    const auto a = run_method("anneal", d, rc, nullptr);
    EXPECT_EQ(a.cells.size(), 2u);
    EXPECT_THROW(run_method("oracle", d, rc, nullptr), ArgumentError);
}

TEST(Methods, ExportedPlacementEvaluatesToTheSameRow) {
    const auto rc = fd_config();
    const auto d = prepare_design(testutil::synthetic(18, 3), rc.env());
    const auto r = run_method("analytical", d, rc, nullptr);
    DesignBundle b = *d->bundle;
    b.placement = export_placement(*d, r.placement);
    const auto o = evaluate_design(b, rc, false);
    EXPECT_NEAR(o.metrics.hpwl, r.metrics.hpwl, 1e-9 * r.metrics.hpwl);
    EXPECT_NEAR(o.metrics.proxy_cost, r.metrics.proxy_cost, 1e-12);
}

TEST(Methods, ComparisonIsDeterministic) {
    const auto rc = fd_config();
    const auto d = prepare_design(testutil::synthetic(19, 3), rc.env());
    for (const char* m : {"analytical", "random"}) EXPECT_EQ(run_method(m, d, rc, nullptr).metrics, run_method(m, d, rc, nullptr).metrics) << m;
}

TEST(Render, EmptyDesignIsCanvasOnly) {
    DesignBundle b;
    b.netlist.canvas_width = 40;
    b.netlist.canvas_height = 20;
    const auto svg = render_design(b, RunConfig{});
    EXPECT_EQ(svg.rfind("<svg ", 0), 0u);
    EXPECT_EQ(count(svg, "<rect"), 1u);
    EXPECT_EQ(count(svg, "<circle"), 0u);
    EXPECT_EQ(count(svg, "<text"), 0u);
    EXPECT_NE(svg.find("width=\"800.00\" height=\"400.00\""), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Render, DrawsLabeledMacrosClustersAndHeat) {
    auto rc = fd_config();
    const auto d = prepare_design(testutil::synthetic(20, 3), rc.env());
    const auto r = run_method("analytical", d, rc, nullptr);
    DesignBundle b = *d->bundle;
    b.placement = export_placement(*d, r.placement);
    const auto svg = render_design(b, rc);
    for (int id : d->macro_order) EXPECT_NE(svg.find(">" + d->base().nodes[static_cast<std::size_t>(id)].name + "</text>"), std::string::npos);
    EXPECT_EQ(count(svg, "<circle"), d->clustered.clusters.size());
    EXPECT_GT(count(svg, "fill=\"#d73027\""), 0u);
    EXPECT_EQ(count(svg, "<text"), d->macro_order.size());
}

TEST(Render, EscapesNames) { EXPECT_EQ(xml_escape("a<b>&\"c"), "a&lt;b&gt;&amp;&quot;c"); }

TEST(Load, ReadsJsonAndBookshelf) {
    const auto tiny = load_design(std::string(MACROPLACE_FIXTURES) + "/tiny/tiny.aux");
    EXPECT_GT(tiny.netlist.nodes.size(), 0u);
    const auto dir = scratch("load");
    json_io::write_design(tiny, dir / "t.json");
    EXPECT_EQ(json_io::to_json(load_design((dir / "t.json").string())), json_io::to_json(tiny));
    EXPECT_EQ(design_name((dir / "t.json").string()), "t");
    EXPECT_THROW(load_design((dir / "missing.json").string()), IoError);
}
