#pragma once

// Reader/writer for the Bookshelf subset: .aux, .nodes, .nets, .pl, .scl.
//
// Coordinates in .pl are lower-left corners in source units; internally they
// become node centers relative to the canvas origin, which is stored in the
// bundle so writing restores the source frame. Nodes missing from .pl are
// left unplaced (and are omitted when writing).

#include "macroplace/design.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace macroplace::bookshelf {

namespace fs = std::filesystem;

struct Files {
    fs::path nodes;
    fs::path nets;
    fs::path pl;
    std::optional<fs::path> scl;
};

struct ParseOptions {
    /// A node is a macro when its shorter side is at least this many row heights.
    double macro_threshold = 4.0;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '#') break;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else if (c == ':') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
            out.emplace_back(":");
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct LineReader {
    explicit LineReader(const fs::path& p) : path(p.string()), in(p) {
        if (!in) throw IoError("cannot open '" + path + "'");
    }

    /// Next non-empty, non-comment line as tokens; false at EOF.
    bool next(std::vector<std::string>& toks) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            toks = tokenize(line);
            if (!toks.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(path, line_no, what); }

    double number(const std::string& tok) const {
        double v;
        if (!parse_double(tok, v)) fail("expected a number, got '" + tok + "'");
        return v;
    }

    long long integer(const std::string& tok) const {
        long long v;
        if (!parse_int(tok, v)) fail("expected an integer, got '" + tok + "'");
        return v;
    }

    std::string path;
    std::ifstream in;
    int line_no = 0;
};

inline bool is_header(const std::vector<std::string>& t) { return t.size() >= 2 && t[0] == "UCLA"; }

inline bool is_decl(const std::vector<std::string>& t, std::string_view key) {
    return t.size() >= 3 && t[0] == key && t[1] == ":";
}

struct RawNode {
    std::string name;
    double w;
    double h;
    bool terminal;
};

inline std::vector<Row> read_scl(const fs::path& p) {
    LineReader r(p);
    std::vector<Row> rows;
    std::vector<std::string> t;
    long long declared = -1;
    std::optional<Row> cur;
    while (r.next(t)) {
        if (is_header(t)) continue;
        if (is_decl(t, "NumRows")) {
            declared = r.integer(t[2]);
        } else if (t[0] == "CoreRow") {
            if (cur) r.fail("nested CoreRow");
            cur = Row{};
        } else if (t[0] == "End") {
            if (!cur) r.fail("End without CoreRow");
            rows.push_back(*cur);
            cur.reset();
        } else if (cur) {
            // Key : value [Key : value ...]
            for (std::size_t i = 0; i < t.size(); i += 3) {
                if (i + 2 >= t.size() || t[i + 1] != ":") r.fail("malformed row attribute");
                const auto& key = t[i];
                const auto& val = t[i + 2];
                if (key == "Coordinate") cur->coordinate = r.number(val);
                else if (key == "Height") cur->height = r.number(val);
                else if (key == "Sitewidth") cur->site_width = r.number(val);
                else if (key == "Sitespacing") cur->site_spacing = r.number(val);
                else if (key == "Siteorient") cur->site_orient = val;
                else if (key == "Sitesymmetry") cur->site_symmetry = val;
                else if (key == "SubrowOrigin") cur->subrow_origin = r.number(val);
                else if (key == "NumSites") cur->num_sites = r.integer(val);
                else r.fail("unknown row attribute '" + key + "'");
            }
        } else {
            r.fail("unexpected token '" + t[0] + "'");
        }
    }
    if (cur) r.fail("unterminated CoreRow");
    if (declared >= 0 && declared != static_cast<long long>(rows.size()))
        r.fail("NumRows declares " + std::to_string(declared) + " rows, found " + std::to_string(rows.size()));
    return rows;
}

}  // namespace detail

/// Resolves the file set named by an .aux file.
inline Files files_from_aux(const fs::path& aux) {
    detail::LineReader r(aux);
    std::vector<std::string> t;
    Files f;
    const auto dir = aux.parent_path();
    bool seen = false;
    while (r.next(t)) {
        if (t.size() < 3 || t[1] != ":") r.fail("expected '<Kind> : files...'");
        seen = true;
        for (std::size_t i = 2; i < t.size(); ++i) {
            const fs::path p = dir / t[i];
            const auto ext = p.extension().string();
            if (ext == ".nodes") f.nodes = p;
            else if (ext == ".nets") f.nets = p;
            else if (ext == ".pl") f.pl = p;
            else if (ext == ".scl") f.scl = p;
        }
    }
    if (!seen || f.nodes.empty() || f.nets.empty() || f.pl.empty())
        throw ParseError(r.path, r.line_no, "aux file must name .nodes, .nets and .pl files");
    return f;
}

/// File set for `<stem>.{nodes,nets,pl,scl}`; the .scl is optional.
inline Files files_from_stem(const fs::path& stem) {
    Files f;
    f.nodes = fs::path(stem.string() + ".nodes");
    f.nets = fs::path(stem.string() + ".nets");
    f.pl = fs::path(stem.string() + ".pl");
    const fs::path scl(stem.string() + ".scl");
    if (fs::exists(scl)) f.scl = scl;
    return f;
}

inline DesignBundle parse(const Files& files, const ParseOptions& opt = {}) {
    using detail::LineReader;
    for (const auto* p : {&files.nodes, &files.nets, &files.pl})
        if (!fs::exists(*p)) throw IoError("missing Bookshelf file '" + p->string() + "'");
    if (files.scl && !fs::exists(*files.scl)) throw IoError("missing Bookshelf file '" + files.scl->string() + "'");

    std::vector<Row> rows;
    if (files.scl) rows = detail::read_scl(*files.scl);

    // .nodes
    std::vector<detail::RawNode> raw;
    std::unordered_map<std::string, int> index;
    {
        LineReader r(files.nodes);
        std::vector<std::string> t;
        long long declared = -1, declared_terms = -1, terms = 0;
        while (r.next(t)) {
            if (detail::is_header(t)) continue;
            if (detail::is_decl(t, "NumNodes")) { declared = r.integer(t[2]); continue; }
            if (detail::is_decl(t, "NumTerminals")) { declared_terms = r.integer(t[2]); continue; }
            if (t.size() < 3 || t.size() > 4) r.fail("expected '<name> <width> <height> [terminal]'");
            bool term = false;
            if (t.size() == 4) {
                if (t[3] != "terminal" && t[3] != "terminal_NI") r.fail("unknown node tag '" + t[3] + "'");
                term = true;
                ++terms;
            }
            const double w = r.number(t[1]);
            const double h = r.number(t[2]);
            if (w < 0.0 || h < 0.0) r.fail("negative node size");
            if (!index.emplace(t[0], static_cast<int>(raw.size())).second) r.fail("duplicate node '" + t[0] + "'");
            raw.push_back({t[0], w, h, term});
        }
        if (declared >= 0 && declared != static_cast<long long>(raw.size()))
            r.fail("NumNodes declares " + std::to_string(declared) + ", found " + std::to_string(raw.size()));
        if (declared_terms >= 0 && declared_terms != terms)
            r.fail("NumTerminals declares " + std::to_string(declared_terms) + ", found " + std::to_string(terms));
    }

    double row_height = 0.0;
    if (!rows.empty()) {
        row_height = rows.front().height;
    } else {
        // Most frequent height among non-terminal nodes.
        std::map<double, std::size_t> freq;
        for (const auto& n : raw)
            if (!n.terminal && n.h > 0.0) ++freq[n.h];
        std::size_t best = 0;
        for (const auto& [h, c] : freq)
            if (c > best) best = c, row_height = h;
        if (row_height <= 0.0) row_height = 1.0;
    }

    DesignBundle b;
    b.row_height = row_height;
    b.rows = rows;
    Netlist& nl = b.netlist;
    const double macro_side = opt.macro_threshold * row_height;
    for (const auto& n : raw) {
        NodeKind kind;
        if (std::min(n.w, n.h) >= macro_side) kind = NodeKind::macro;
        else if (n.terminal) kind = NodeKind::terminal;
        else kind = NodeKind::std_cell;
        // Terminal-tagged blocks that are macro-sized are fixed macros.
        nl.add_node(n.name, n.w, n.h, kind, !n.terminal);
    }

    // .nets
    {
        LineReader r(files.nets);
        std::vector<std::string> t;
        long long declared_nets = -1, declared_pins = -1, pins_seen = 0;
        while (r.next(t)) {
            if (detail::is_header(t)) continue;
            if (detail::is_decl(t, "NumNets")) { declared_nets = r.integer(t[2]); continue; }
            if (detail::is_decl(t, "NumPins")) { declared_pins = r.integer(t[2]); continue; }
            if (!detail::is_decl(t, "NetDegree")) r.fail("expected 'NetDegree : <d> [name]'");
            const long long deg = r.integer(t[2]);
            if (deg < 1) r.fail("net degree must be positive");
            std::string name = t.size() > 3 ? t[3] : "net" + std::to_string(nl.nets.size());
            std::vector<Pin> pins;
            pins.reserve(static_cast<std::size_t>(deg));
            for (long long k = 0; k < deg; ++k) {
                if (!r.next(t)) r.fail("unexpected end of file inside net '" + name + "'");
                auto it = index.find(t[0]);
                if (it == index.end()) r.fail("net '" + name + "' references unknown node '" + t[0] + "'");
                Pin pin{it->second, 0.0, 0.0};
                // name dir [: ox oy]
                if (t.size() == 5 && t[2] == ":") {
                    pin.offset_x = r.number(t[3]);
                    pin.offset_y = r.number(t[4]);
                } else if (t.size() != 2 && t.size() != 1) {
                    r.fail("malformed pin line");
                }
                pins.push_back(pin);
            }
            pins_seen += deg;
            nl.add_net(std::move(name), std::move(pins));
        }
        if (declared_nets >= 0 && declared_nets != static_cast<long long>(nl.nets.size()))
            r.fail("NumNets declares " + std::to_string(declared_nets) + ", found " + std::to_string(nl.nets.size()));
        if (declared_pins >= 0 && declared_pins != pins_seen)
            r.fail("NumPins declares " + std::to_string(declared_pins) + ", found " + std::to_string(pins_seen));
    }

    // .pl
    b.placement = Placement(nl.nodes.size());
    b.orientations.assign(nl.nodes.size(), "N");
    std::vector<Point> lower_left(nl.nodes.size());
    {
        LineReader r(files.pl);
        std::vector<std::string> t;
        while (r.next(t)) {
            if (detail::is_header(t)) continue;
            if (t.size() < 3) r.fail("expected '<name> <x> <y> : <orient> [/FIXED]'");
            auto it = index.find(t[0]);
            if (it == index.end()) r.fail("unknown node '" + t[0] + "'");
            const int id = it->second;
            lower_left[static_cast<std::size_t>(id)] = {r.number(t[1]), r.number(t[2])};
            b.placement.placed[static_cast<std::size_t>(id)] = 1;
            std::size_t i = 3;
            if (i < t.size() && t[i] == ":") {
                ++i;
                if (i < t.size() && t[i].front() != '/') b.orientations[static_cast<std::size_t>(id)] = t[i++];
            }
            for (; i < t.size(); ++i) {
                if (t[i] == "/FIXED" || t[i] == "/FIXED_NI") {
                    if (nl.nodes[static_cast<std::size_t>(id)].kind != NodeKind::terminal)
                        nl.nodes[static_cast<std::size_t>(id)].movable = false;
                } else {
                    r.fail("unexpected token '" + t[i] + "'");
                }
            }
        }
    }

    // Canvas: rows when available, else the extent of placed nodes.
    double lx = 0, ly = 0, ux = 0, uy = 0;
    if (!rows.empty()) {
        lx = ly = std::numeric_limits<double>::infinity();
        ux = uy = -std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            lx = std::min(lx, row.subrow_origin);
            ux = std::max(ux, row.subrow_origin + static_cast<double>(row.num_sites) * row.site_spacing);
            ly = std::min(ly, row.coordinate);
            uy = std::max(uy, row.coordinate + row.height);
        }
    } else {
        bool any = false;
        for (const auto& node : nl.nodes) {
            if (!b.placement.is_placed(node.id)) continue;
            const auto& p = lower_left[static_cast<std::size_t>(node.id)];
            if (!any) lx = p.x, ly = p.y, ux = p.x + node.width, uy = p.y + node.height, any = true;
            lx = std::min(lx, p.x);
            ly = std::min(ly, p.y);
            ux = std::max(ux, p.x + node.width);
            uy = std::max(uy, p.y + node.height);
        }
    }
    b.origin_x = lx;
    b.origin_y = ly;
    nl.canvas_width = ux - lx;
    nl.canvas_height = uy - ly;
    for (const auto& node : nl.nodes) {
        if (!b.placement.is_placed(node.id)) continue;
        const auto& p = lower_left[static_cast<std::size_t>(node.id)];
        b.placement.positions[static_cast<std::size_t>(node.id)] = {p.x - lx + 0.5 * node.width, p.y - ly + 0.5 * node.height};
    }
    b.provenance = "bookshelf:" + files.nodes.stem().string();
    return b;
}

inline DesignBundle parse_aux_or_stem(const fs::path& p, const ParseOptions& opt = {}) {
    if (p.extension() == ".aux") return parse(files_from_aux(p), opt);
    return parse(files_from_stem(p), opt);
}

/// Rows covering the canvas when the bundle carries none.
inline std::vector<Row> synthesize_rows(const DesignBundle& b) {
    const auto& nl = b.netlist;
    double rh = b.row_height > 0.0 ? b.row_height : 1.0;
    auto count = static_cast<long long>(std::llround(nl.canvas_height / rh));
    if (count < 1) count = 1;
    if (std::abs(static_cast<double>(count) * rh - nl.canvas_height) > 1e-9 * std::max(1.0, nl.canvas_height))
        rh = nl.canvas_height / static_cast<double>(count);
    std::vector<Row> rows;
    for (long long i = 0; i < count; ++i) {
        Row row;
        row.coordinate = b.origin_y + static_cast<double>(i) * rh;
        row.height = rh;
        row.site_width = nl.canvas_width;
        row.site_spacing = nl.canvas_width;
        row.subrow_origin = b.origin_x;
        row.num_sites = 1;
        rows.push_back(row);
    }
    return rows;
}

/// Writes `<dir>/<name>.{aux,nodes,nets,pl,scl}`.
inline Files write(const DesignBundle& b, const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    const auto& nl = b.netlist;
    Files f{dir / (name + ".nodes"), dir / (name + ".nets"), dir / (name + ".pl"), dir / (name + ".scl")};
    auto open = [](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        return out;
    };
    const auto fmt = format_double;
    {
        auto out = open(f.nodes);
        std::size_t terms = 0;
        for (const auto& n : nl.nodes) terms += n.kind == NodeKind::terminal ? 1 : 0;
        out << "UCLA nodes 1.0\n\n";
        out << "NumNodes : " << nl.nodes.size() << "\n";
        out << "NumTerminals : " << terms << "\n";
        for (const auto& n : nl.nodes) {
            out << "  " << n.name << " " << fmt(n.width) << " " << fmt(n.height);
            if (n.kind == NodeKind::terminal) out << " terminal";
            out << "\n";
        }
    }
    {
        auto out = open(f.nets);
        std::size_t pins = 0;
        for (const auto& net : nl.nets) pins += net.pins.size();
        out << "UCLA nets 1.0\n\n";
        out << "NumNets : " << nl.nets.size() << "\n";
        out << "NumPins : " << pins << "\n";
        for (const auto& net : nl.nets) {
            out << "NetDegree : " << net.pins.size() << " " << net.name << "\n";
            for (const auto& pin : net.pins) {
                out << "  " << nl.nodes[static_cast<std::size_t>(pin.node)].name << " B : " << fmt(pin.offset_x) << " "
                    << fmt(pin.offset_y) << "\n";
            }
        }
    }
    {
        auto out = open(f.pl);
        out << "UCLA pl 1.0\n\n";
        for (const auto& n : nl.nodes) {
            if (!b.placement.is_placed(n.id)) continue;
            const auto& c = b.placement.at(n.id);
            const double x = c.x - 0.5 * n.width + b.origin_x;
            const double y = c.y - 0.5 * n.height + b.origin_y;
            const auto& orient = b.orientations.empty() ? std::string("N") : b.orientations[static_cast<std::size_t>(n.id)];
            out << n.name << " " << fmt(x) << " " << fmt(y) << " : " << orient;
            if (!n.movable) out << " /FIXED";
            out << "\n";
        }
    }
    {
        auto out = open(*f.scl);
        const auto rows = b.rows.empty() ? synthesize_rows(b) : b.rows;
        out << "UCLA scl 1.0\n\n";
        out << "NumRows : " << rows.size() << "\n\n";
        for (const auto& row : rows) {
            out << "CoreRow Horizontal\n";
            out << "  Coordinate : " << fmt(row.coordinate) << "\n";
            out << "  Height : " << fmt(row.height) << "\n";
            out << "  Sitewidth : " << fmt(row.site_width) << "\n";
            out << "  Sitespacing : " << fmt(row.site_spacing) << "\n";
            out << "  Siteorient : " << row.site_orient << "\n";
            out << "  Sitesymmetry : " << row.site_symmetry << "\n";
            out << "  SubrowOrigin : " << fmt(row.subrow_origin) << " NumSites : " << row.num_sites << "\n";
            out << "End\n";
        }
    }
    {
        auto out = open(dir / (name + ".aux"));
        out << "RowBasedPlacement : " << name << ".nodes " << name << ".nets " << name << ".pl " << name << ".scl\n";
    }
    return f;
}

}  // namespace macroplace::bookshelf
