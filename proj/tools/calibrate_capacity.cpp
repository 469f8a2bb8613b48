// Regenerates the default congestion capacities in EvalConfig: the 95th
// percentile of per-cell routing demand over random masked macro placements
// of a seeded synthetic suite, clusters placed by the force-directed engine,
// measured on the 16x16 evaluation grid.

#include "macroplace/env.hpp"
#include "macroplace/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

using namespace macroplace;

namespace {

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto i = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
    return v[i];
}

}  // namespace

int main() {
    EnvConfig cfg;
    cfg.rows = cfg.cols = 16;
    cfg.placer.engine = placer::Engine::force_directed;
    std::vector<double> dh, dv;
    for (int d = 0; d < 12; ++d) {
        SyntheticSpec s;
        s.seed = 1000 + static_cast<std::uint64_t>(d);
        s.macro_count = 3 + d % 4;
        s.std_cell_count = 200 + 80 * d;
        s.net_count = s.std_cell_count * 6 / 5;
        const auto bundle = generate_synthetic(s);
        Environment env(prepare_design(bundle, cfg), cfg);
        for (std::uint64_t k = 0; k < 8; ++k) {
            const auto t = rollout(env, uniform_policy, mix_seed(s.seed, k));
            if (t.dead_end) continue;
            const auto m = congestion_map(env.design().reduced(), env.outcome()->placement, cfg.eval);
            dh.insert(dh.end(), m.demand_h.begin(), m.demand_h.end());
            dv.insert(dv.end(), m.demand_v.begin(), m.demand_v.end());
        }
    }
    std::printf("cells %zu\n", dh.size());
    std::printf("capacity_h %.3f\ncapacity_v %.3f\n", percentile(dh, 0.95), percentile(dv, 0.95));
    std::printf("median_h %.3f\nmedian_v %.3f\n", percentile(dh, 0.5), percentile(dv, 0.5));
    return 0;
}
