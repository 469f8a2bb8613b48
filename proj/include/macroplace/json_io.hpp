#pragma once

// JSON design interchange. Field names are documented in
// docs/design.schema.json; the mapping onto Netlist/Placement is one-to-one.

#include "macroplace/design.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace macroplace::json_io {

using nlohmann::json;

inline constexpr int kDesignFormatVersion = 1;

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where, 0, "expected an object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || k == a;
        if (!ok) throw ParseError(where, 0, "unknown key '" + k + "'");
    }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where, 0, std::string("missing key '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where, 0, std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline json positions_to_json(const Placement& pl) {
    json arr = json::array();
    for (std::size_t i = 0; i < pl.size(); ++i) {
        if (pl.placed[i]) arr.push_back({{"x", pl.positions[i].x}, {"y", pl.positions[i].y}});
        else arr.push_back(nullptr);
    }
    return arr;
}

inline Placement positions_from_json(const json& arr, std::size_t node_count, const std::string& where) {
    if (!arr.is_array()) throw ParseError(where, 0, "'positions' must be an array");
    if (arr.size() != node_count)
        throw ParseError(where, 0, "'positions' has " + std::to_string(arr.size()) + " entries for " + std::to_string(node_count) + " nodes");
    Placement pl(node_count);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        if (e.is_null()) continue;
        detail::reject_unknown(e, {"x", "y"}, where + ": positions[" + std::to_string(i) + "]");
        pl.set(static_cast<int>(i), {detail::get<double>(e, "x", where), detail::get<double>(e, "y", where)});
    }
    return pl;
}

inline json to_json(const DesignBundle& b) {
    const auto& nl = b.netlist;
    json j;
    j["format"] = "macroplace-design";
    j["version"] = kDesignFormatVersion;
    j["provenance"] = b.provenance;
    j["canvas"] = {{"width", nl.canvas_width}, {"height", nl.canvas_height}, {"origin_x", b.origin_x}, {"origin_y", b.origin_y},
                   {"row_height", b.row_height}};
    j["target_density"] = nl.target_density;
    json nodes = json::array();
    for (const auto& n : nl.nodes) {
        json o = {{"name", n.name}, {"width", n.width}, {"height", n.height}, {"kind", std::string(to_string(n.kind))}, {"movable", n.movable}};
        const auto& orient = b.orientations.empty() ? std::string("N") : b.orientations[static_cast<std::size_t>(n.id)];
        if (orient != "N") o["orientation"] = orient;
        nodes.push_back(std::move(o));
    }
    j["nodes"] = std::move(nodes);
    json nets = json::array();
    for (const auto& net : nl.nets) {
        json pins = json::array();
        for (const auto& p : net.pins) pins.push_back({{"node", p.node}, {"dx", p.offset_x}, {"dy", p.offset_y}});
        nets.push_back({{"name", net.name}, {"weight", net.weight}, {"pins", std::move(pins)}});
    }
    j["nets"] = std::move(nets);
    j["positions"] = positions_to_json(b.placement);
    json blk = json::array();
    for (const auto& r : b.blockages) blk.push_back({r.lx, r.ly, r.ux, r.uy});
    j["blockages"] = std::move(blk);
    return j;
}

inline DesignBundle from_json(const json& j, const std::string& where = "<json>") {
    detail::reject_unknown(j, {"format", "version", "provenance", "canvas", "target_density", "nodes", "nets", "positions", "blockages"}, where);
    if (j.contains("format") && j["format"] != "macroplace-design") throw ParseError(where, 0, "not a macroplace design");
    if (j.contains("version") && j["version"] != kDesignFormatVersion) throw ParseError(where, 0, "unsupported design version");
    DesignBundle b;
    Netlist& nl = b.netlist;
    const auto& canvas = j.at("canvas");
    detail::reject_unknown(canvas, {"width", "height", "origin_x", "origin_y", "row_height"}, where + ": canvas");
    nl.canvas_width = detail::get<double>(canvas, "width", where);
    nl.canvas_height = detail::get<double>(canvas, "height", where);
    b.origin_x = canvas.value("origin_x", 0.0);
    b.origin_y = canvas.value("origin_y", 0.0);
    b.row_height = canvas.value("row_height", 1.0);
    nl.target_density = detail::get<double>(j, "target_density", where);
    b.provenance = j.value("provenance", std::string{});

    std::set<std::string> names;
    for (const auto& o : detail::get<json>(j, "nodes", where)) {
        const auto w = where + ": nodes[" + std::to_string(nl.nodes.size()) + "]";
        detail::reject_unknown(o, {"name", "width", "height", "kind", "movable", "orientation"}, w);
        auto kind = node_kind_from_string(detail::get<std::string>(o, "kind", w));
        if (!kind) throw ParseError(w, 0, "unknown node kind");
        auto name = detail::get<std::string>(o, "name", w);
        if (!names.insert(name).second) throw ParseError(w, 0, "duplicate node '" + name + "'");
        nl.add_node(std::move(name), detail::get<double>(o, "width", w), detail::get<double>(o, "height", w), *kind, o.value("movable", true));
        b.orientations.push_back(o.value("orientation", std::string("N")));
    }
    for (const auto& o : detail::get<json>(j, "nets", where)) {
        const auto w = where + ": nets[" + std::to_string(nl.nets.size()) + "]";
        detail::reject_unknown(o, {"name", "weight", "pins"}, w);
        std::vector<Pin> pins;
        for (const auto& p : detail::get<json>(o, "pins", w)) {
            detail::reject_unknown(p, {"node", "dx", "dy"}, w);
            const int node = detail::get<int>(p, "node", w);
            if (node < 0 || node >= static_cast<int>(nl.nodes.size())) throw ParseError(w, 0, "pin references node id " + std::to_string(node) + " out of range");
            pins.push_back({node, p.value("dx", 0.0), p.value("dy", 0.0)});
        }
        nl.add_net(detail::get<std::string>(o, "name", w), std::move(pins), o.value("weight", 1.0));
    }
    if (j.contains("positions")) b.placement = positions_from_json(j["positions"], nl.nodes.size(), where);
    else b.placement = Placement(nl.nodes.size());
    if (j.contains("blockages")) {
        for (const auto& r : j["blockages"]) {
            if (!r.is_array() || r.size() != 4) throw ParseError(where, 0, "blockage must be [lx, ly, ux, uy]");
            b.blockages.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()});
        }
    }
    return b;
}

inline json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(p.string(), 0, e.what());
    }
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << text;
}

inline DesignBundle read_design(const std::filesystem::path& p) { return from_json(read_json_file(p), p.string()); }

inline void write_design(const DesignBundle& b, const std::filesystem::path& p) { write_text_file(p, to_json(b).dump(1) + "\n"); }

}  // namespace macroplace::json_io
