#pragma once

#include "macroplace/common.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace macroplace {

enum class NodeKind { macro, std_cell, terminal };

inline std::string_view to_string(NodeKind k) {
    switch (k) {
    case NodeKind::macro: return "macro";
    case NodeKind::std_cell: return "std_cell";
    case NodeKind::terminal: return "terminal";
    }
    return "?";
}

inline std::optional<NodeKind> node_kind_from_string(std::string_view s) {
    if (s == "macro") return NodeKind::macro;
    if (s == "std_cell") return NodeKind::std_cell;
    if (s == "terminal") return NodeKind::terminal;
    return std::nullopt;
}

struct Node {
    int id = 0;
    std::string name;
    double width = 0.0;
    double height = 0.0;
    NodeKind kind = NodeKind::std_cell;
    bool movable = true;

    double area() const { return width * height; }

    friend bool operator==(const Node&, const Node&) = default;
};

/// Pin offsets are relative to the node center.
struct Pin {
    int node = 0;
    double offset_x = 0.0;
    double offset_y = 0.0;

    friend bool operator==(const Pin&, const Pin&) = default;
};

struct Net {
    int id = 0;
    std::string name;
    std::vector<Pin> pins;
    double weight = 1.0;

    friend bool operator==(const Net&, const Net&) = default;
};

/// Design hypergraph over a canvas spanning [0, canvas_width] x [0, canvas_height].
struct Netlist {
    std::vector<Node> nodes;
    std::vector<Net> nets;
    double canvas_width = 0.0;
    double canvas_height = 0.0;
    double target_density = 1.0;

    std::size_t node_count() const { return nodes.size(); }
    double canvas_area() const { return canvas_width * canvas_height; }

    /// Area of every non-terminal node: the area a placer has to fit.
    double movable_area() const {
        double a = 0.0;
        for (const auto& n : nodes)
            if (n.kind != NodeKind::terminal) a += n.area();
        return a;
    }

    /// Appends a node with the next dense id and returns that id.
    int add_node(std::string name, double w, double h, NodeKind kind, bool movable = true) {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(Node{id, std::move(name), w, h, kind, kind == NodeKind::terminal ? false : movable});
        return id;
    }

    int add_net(std::string name, std::vector<Pin> pins, double weight = 1.0) {
        const int id = static_cast<int>(nets.size());
        nets.push_back(Net{id, std::move(name), std::move(pins), weight});
        return id;
    }

    friend bool operator==(const Netlist&, const Netlist&) = default;
};

/// Node-center coordinates plus a placed flag per node.
struct Placement {
    std::vector<Point> positions;
    std::vector<char> placed;

    Placement() = default;
    explicit Placement(std::size_t n) : positions(n), placed(n, 0) {}

    std::size_t size() const { return positions.size(); }
    bool is_placed(int node) const { return placed[static_cast<std::size_t>(node)] != 0; }

    void set(int node, Point p) {
        positions[static_cast<std::size_t>(node)] = p;
        placed[static_cast<std::size_t>(node)] = 1;
    }

    void unset(int node) { placed[static_cast<std::size_t>(node)] = 0; }

    const Point& at(int node) const { return positions[static_cast<std::size_t>(node)]; }

    friend bool operator==(const Placement&, const Placement&) = default;
};

inline Rect node_rect(const Node& n, Point center) { return Rect::centered(center, n.width, n.height); }

inline Point pin_position(const Placement& pl, const Pin& pin, bool use_pin_offsets) {
    const Point c = pl.at(pin.node);
    if (!use_pin_offsets) return c;
    return {c.x + pin.offset_x, c.y + pin.offset_y};
}

/// Bounding box of a net's pins; nullopt if the net has fewer than two pins.
inline std::optional<Rect> net_bbox(const Netlist& nl, const Placement& pl, const Net& net, bool use_pin_offsets) {
    if (net.pins.size() < 2) return std::nullopt;
    Rect box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& pin : net.pins) {
        if (!pl.is_placed(pin.node))
            throw EvaluationError("net '" + net.name + "' references unplaced node '" +
                                  nl.nodes[static_cast<std::size_t>(pin.node)].name + "'");
        const Point p = pin_position(pl, pin, use_pin_offsets);
        box.lx = std::min(box.lx, p.x);
        box.ux = std::max(box.ux, p.x);
        box.ly = std::min(box.ly, p.y);
        box.uy = std::max(box.uy, p.y);
    }
    return box;
}

/// Weighted half-perimeter wirelength. Nets with fewer than two pins add 0.
inline double hpwl(const Netlist& nl, const Placement& pl, bool use_pin_offsets) {
    if (pl.size() != nl.nodes.size()) throw EvaluationError("hpwl: placement size does not match netlist");
    double total = 0.0;
    for (const auto& net : nl.nets) {
        if (auto box = net_bbox(nl, pl, net, use_pin_offsets)) total += net.weight * (box->width() + box->height());
    }
    return total;
}

struct BenchmarkStats {
    std::size_t macro_count = 0;
    std::size_t std_cell_count = 0;
    std::size_t terminal_count = 0;
    std::size_t net_count = 0;
    double utilization = 0.0;
    double max_density = 0.0;
    bool over_utilized = false;
};

/// Table-style statistics. Utilization counts macros and std cells regardless
/// of their movable flag, so editing a design does not change it.
inline BenchmarkStats stats(const Netlist& nl) {
    BenchmarkStats s;
    for (const auto& n : nl.nodes) {
        switch (n.kind) {
        case NodeKind::macro: ++s.macro_count; break;
        case NodeKind::std_cell: ++s.std_cell_count; break;
        case NodeKind::terminal: ++s.terminal_count; break;
        }
    }
    s.net_count = nl.nets.size();
    const double canvas = nl.canvas_area();
    s.utilization = canvas > 0.0 ? nl.movable_area() / canvas : 0.0;
    s.max_density = nl.target_density;
    s.over_utilized = s.utilization > 1.0;
    return s;
}

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const Netlist& nl) {
    ValidationReport r;
    const auto n = static_cast<int>(nl.nodes.size());
    for (int i = 0; i < n; ++i) {
        const auto& node = nl.nodes[static_cast<std::size_t>(i)];
        if (node.id != i) r.violations.push_back("node '" + node.name + "' has id " + std::to_string(node.id) + ", expected " + std::to_string(i));
        if (!(node.width > 0.0) || !(node.height > 0.0)) r.violations.push_back("node '" + node.name + "' has non-positive size");
        if (node.kind == NodeKind::terminal && node.movable) r.violations.push_back("terminal '" + node.name + "' is movable");
    }
    for (std::size_t j = 0; j < nl.nets.size(); ++j) {
        const auto& net = nl.nets[j];
        if (net.id != static_cast<int>(j)) r.violations.push_back("net '" + net.name + "' has id " + std::to_string(net.id) + ", expected " + std::to_string(j));
        if (net.pins.empty()) r.violations.push_back("net '" + net.name + "' has no pins");
        if (!(net.weight >= 0.0)) r.violations.push_back("net '" + net.name + "' has negative weight");
        for (const auto& pin : net.pins) {
            if (pin.node < 0 || pin.node >= n) {
                r.violations.push_back("net '" + net.name + "' pin references node id " + std::to_string(pin.node) + " out of range");
                continue;
            }
            const auto& node = nl.nodes[static_cast<std::size_t>(pin.node)];
            if (std::abs(pin.offset_x) > 0.5 * node.width || std::abs(pin.offset_y) > 0.5 * node.height)
                r.violations.push_back("net '" + net.name + "' pin offset exceeds node '" + node.name + "' half-size");
        }
    }
    if (!(nl.canvas_width > 0.0) || !(nl.canvas_height > 0.0)) r.violations.push_back("canvas has non-positive size");
    if (!(nl.target_density > 0.0 && nl.target_density <= 1.0)) r.violations.push_back("target_density outside (0, 1]");
    if (nl.movable_area() > nl.target_density * nl.canvas_area())
        r.warnings.push_back("movable area exceeds target_density x canvas area");
    return r;
}

/// Violations of the placement invariant (placed boxes inside the canvas).
inline std::vector<std::string> placement_violations(const Netlist& nl, const Placement& pl, double tol = 1e-9) {
    std::vector<std::string> out;
    if (pl.size() != nl.nodes.size()) {
        out.push_back("placement size does not match netlist");
        return out;
    }
    const double ex = tol * std::max(1.0, nl.canvas_width);
    const double ey = tol * std::max(1.0, nl.canvas_height);
    for (const auto& node : nl.nodes) {
        if (!pl.is_placed(node.id)) continue;
        const Rect r = node_rect(node, pl.at(node.id));
        if (r.lx < -ex || r.ly < -ey || r.ux > nl.canvas_width + ex || r.uy > nl.canvas_height + ey)
            out.push_back("node '" + node.name + "' lies outside the canvas");
    }
    return out;
}

/// Clamps a center so the node's box stays inside the canvas (centered when it cannot fit).
inline Point clamp_to_canvas(const Netlist& nl, const Node& node, Point c) {
    auto clamp1 = [](double v, double half, double extent) {
        if (2.0 * half >= extent) return 0.5 * extent;
        return std::clamp(v, half, extent - half);
    };
    return {clamp1(c.x, 0.5 * node.width, nl.canvas_width), clamp1(c.y, 0.5 * node.height, nl.canvas_height)};
}

}  // namespace macroplace
