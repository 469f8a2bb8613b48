#pragma once

#include "macroplace/clustering.hpp"
#include "macroplace/placer/analytical.hpp"
#include "macroplace/placer/force_directed.hpp"

namespace macroplace::placer {

inline PlaceResult place(const Problem& problem, const PlacerConfig& cfg) {
    if (!problem.netlist) throw ArgumentError("placer: no netlist");
    if (problem.movable.size() != problem.netlist->nodes.size() || problem.initial.size() != problem.netlist->nodes.size())
        throw ArgumentError("placer: problem sizes do not match the netlist");
    for (const auto& node : problem.netlist->nodes)
        if (problem.movable[static_cast<std::size_t>(node.id)] && !problem.initial.is_placed(node.id))
            throw PlacementError("placer: movable node '" + node.name + "' has no initial position");
    return cfg.engine == Engine::analytical ? place_analytical(problem, cfg) : place_force_directed(problem, cfg);
}

/// Canvas center plus seeded jitter of +-init_jitter * canvas.
inline Point initial_position(const Netlist& nl, const PlacerConfig& cfg, Rng& rng) {
    const double jx = (2.0 * rng.uniform() - 1.0) * cfg.init_jitter * nl.canvas_width;
    const double jy = (2.0 * rng.uniform() - 1.0) * cfg.init_jitter * nl.canvas_height;
    return {0.5 * nl.canvas_width + jx, 0.5 * nl.canvas_height + jy};
}

/// Places the clusters of `cn` around fixed macros and terminals.
/// `fixed` is a placement of the reduced netlist; every macro and terminal
/// must be placed. Clusters placed in `fixed` start there, the others at the
/// canvas center plus jitter.
inline PlaceResult place_clusters(const ClusteredNetlist& cn, const Placement& fixed, const PlacerConfig& cfg) {
    const Netlist& nl = cn.reduced;
    if (fixed.size() != nl.nodes.size()) throw ArgumentError("place_clusters: placement does not match the reduced netlist");
    Problem p{&nl, fixed, std::vector<char>(nl.nodes.size(), 0)};
    Rng rng(mix_seed(cfg.seed, 0x636c7573ULL));
    for (const auto& node : nl.nodes) {
        if (!cn.is_cluster_node(node.id)) {
            if (!fixed.is_placed(node.id)) throw PlacementError("place_clusters: '" + node.name + "' must be placed before the clusters");
            continue;
        }
        p.movable[static_cast<std::size_t>(node.id)] = 1;
        if (!p.initial.is_placed(node.id)) p.initial.set(node.id, clamp_to_canvas(nl, node, initial_position(nl, cfg, rng)));
    }
    return place(p, cfg);
}

}  // namespace macroplace::placer
