#pragma once

#include "macroplace/netlist.hpp"

#include <string>
#include <vector>

namespace macroplace {

/// One placement row as described in a Bookshelf .scl file.
struct Row {
    double coordinate = 0.0;
    double height = 0.0;
    double site_width = 1.0;
    double site_spacing = 1.0;
    std::string site_orient = "N";
    std::string site_symmetry = "Y";
    double subrow_origin = 0.0;
    long long num_sites = 0;

    friend bool operator==(const Row&, const Row&) = default;
};

/// A netlist together with its initial/original locations and the side data
/// needed to write it back out.
struct DesignBundle {
    Netlist netlist;
    Placement placement;
    std::string provenance;
    /// Per-node orientation string; orientation is never optimized.
    std::vector<std::string> orientations;
    /// Placement blockages / region constraints carried by the source.
    std::vector<Rect> blockages;
    std::vector<Row> rows;
    double row_height = 1.0;
    /// Source-coordinate location of the canvas lower-left corner.
    double origin_x = 0.0;
    double origin_y = 0.0;

    friend bool operator==(const DesignBundle&, const DesignBundle&) = default;
};

inline DesignBundle make_bundle(Netlist nl, std::string provenance = {}) {
    DesignBundle b;
    const auto n = nl.nodes.size();
    b.netlist = std::move(nl);
    b.placement = Placement(n);
    b.orientations.assign(n, "N");
    b.provenance = std::move(provenance);
    return b;
}

/// Ids of all macros in ascending id order.
inline std::vector<int> macro_ids(const Netlist& nl) {
    std::vector<int> ids;
    for (const auto& n : nl.nodes)
        if (n.kind == NodeKind::macro) ids.push_back(n.id);
    return ids;
}

}  // namespace macroplace
