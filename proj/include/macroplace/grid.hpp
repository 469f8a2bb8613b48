#pragma once

// Discretized canvas for macro placement. Only macros occupy cells; a macro
// dropped on cell (r, c) has its center at that cell's center.

#include "macroplace/netlist.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace macroplace {

struct PlacedMacro {
    int node = 0;
    int row = 0;
    int col = 0;

    friend bool operator==(const PlacedMacro&, const PlacedMacro&) = default;
};

struct Grid {
    int rows = 1;
    int cols = 1;
    double cell_w = 1.0;
    double cell_h = 1.0;
    /// Row-major, true when covered by a placed macro.
    std::vector<char> occupancy;
    std::vector<PlacedMacro> placed_macros;

    int cell_count() const { return rows * cols; }
    int index(int row, int col) const { return row * cols + col; }
    bool occupied(int row, int col) const { return occupancy[static_cast<std::size_t>(index(row, col))] != 0; }
    double canvas_width() const { return cell_w * cols; }
    double canvas_height() const { return cell_h * rows; }

    Point cell_center(int row, int col) const { return {(col + 0.5) * cell_w, (row + 0.5) * cell_h}; }

    Rect cell_rect(int row, int col) const { return {col * cell_w, row * cell_h, (col + 1) * cell_w, (row + 1) * cell_h}; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

inline Grid make_grid(double canvas_width, double canvas_height, int rows, int cols) {
    if (rows < 1 || cols < 1) throw ArgumentError("grid needs at least one row and one column");
    if (!(canvas_width > 0.0) || !(canvas_height > 0.0)) throw ArgumentError("grid needs a positive canvas");
    Grid g;
    g.rows = rows;
    g.cols = cols;
    g.cell_w = canvas_width / cols;
    g.cell_h = canvas_height / rows;
    g.occupancy.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
    return g;
}

inline Grid make_grid(const Netlist& nl, int rows, int cols) { return make_grid(nl.canvas_width, nl.canvas_height, rows, cols); }

/// Inclusive cell-index rectangle [row0, row1] x [col0, col1]; empty when row0 > row1.
struct CellRange {
    int row0 = 0, row1 = -1, col0 = 0, col1 = -1;

    bool empty() const { return row0 > row1 || col0 > col1; }
};

namespace detail {

// Relative tolerance under which an overlap counts as a boundary touch.
inline constexpr double kTouchTol = 1e-9;

inline void cover_1d(double lo, double hi, double cell, int n, int& i0, int& i1) {
    const double eps = kTouchTol * cell;
    i0 = std::max(0, static_cast<int>(std::floor(lo / cell)) - 1);
    i1 = std::min(n - 1, static_cast<int>(std::floor(hi / cell)) + 1);
    while (i0 <= i1 && overlap_length(lo, hi, i0 * cell, (i0 + 1) * cell) <= eps) ++i0;
    while (i1 >= i0 && overlap_length(lo, hi, i1 * cell, (i1 + 1) * cell) <= eps) --i1;
}

}  // namespace detail

/// Cells (within the grid) sharing positive area with the macro box when its
/// center sits on the (row, col) cell center.
inline CellRange footprint_range(const Grid& g, const Node& macro, int row, int col) {
    const Rect box = node_rect(macro, g.cell_center(row, col));
    CellRange r;
    detail::cover_1d(box.ly, box.uy, g.cell_h, g.rows, r.row0, r.row1);
    detail::cover_1d(box.lx, box.ux, g.cell_w, g.cols, r.col0, r.col1);
    return r;
}

/// Footprint as a sorted list of row-major cell indices.
inline std::vector<int> footprint(const Grid& g, const Node& macro, int row, int col) {
    if (row < 0 || row >= g.rows || col < 0 || col >= g.cols) throw ArgumentError("footprint: cell out of range");
    const auto r = footprint_range(g, macro, row, col);
    std::vector<int> cells;
    for (int i = r.row0; i <= r.row1; ++i)
        for (int j = r.col0; j <= r.col1; ++j) cells.push_back(g.index(i, j));
    return cells;
}

/// True when the macro box centered on (row, col) stays inside the canvas.
inline bool fits_canvas(const Grid& g, const Node& macro, int row, int col) {
    const Rect box = node_rect(macro, g.cell_center(row, col));
    const double ex = detail::kTouchTol * g.cell_w, ey = detail::kTouchTol * g.cell_h;
    return box.lx >= -ex && box.ly >= -ey && box.ux <= g.canvas_width() + ex && box.uy <= g.canvas_height() + ey;
}

struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<char> feasible;

    bool at(int cell) const { return feasible[static_cast<std::size_t>(cell)] != 0; }
    bool at(int row, int col) const { return at(row * cols + col); }

    int count() const {
        int n = 0;
        for (char f : feasible) n += f ? 1 : 0;
        return n;
    }

    bool any() const { return count() > 0; }

    friend bool operator==(const Mask&, const Mask&) = default;
};

/// Feasible cells for `macro`: its box stays in the canvas and covers no
/// occupied cell. Uses a summed-area table of the occupancy.
inline Mask feasibility_mask(const Grid& g, const Node& macro) {
    const int R = g.rows, C = g.cols;
    std::vector<int> sat(static_cast<std::size_t>((R + 1) * (C + 1)), 0);
    auto S = [&](int i, int j) -> int& { return sat[static_cast<std::size_t>(i * (C + 1) + j)]; };
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) S(i + 1, j + 1) = S(i, j + 1) + S(i + 1, j) - S(i, j) + (g.occupied(i, j) ? 1 : 0);

    Mask m{R, C, std::vector<char>(static_cast<std::size_t>(R * C), 0)};
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            if (!fits_canvas(g, macro, i, j)) continue;
            const auto f = footprint_range(g, macro, i, j);
            const int covered = f.empty() ? 0 : S(f.row1 + 1, f.col1 + 1) - S(f.row0, f.col1 + 1) - S(f.row1 + 1, f.col0) + S(f.row0, f.col0);
            m.feasible[static_cast<std::size_t>(g.index(i, j))] = covered == 0 ? 1 : 0;
        }
    }
    return m;
}

inline bool is_placed_on_grid(const Grid& g, int node) {
    for (const auto& pm : g.placed_macros)
        if (pm.node == node) return true;
    return false;
}

/// Places `macro` on (row, col) and returns the updated grid.
inline Grid place_on_grid(Grid g, const Node& macro, int row, int col) {
    if (row < 0 || row >= g.rows || col < 0 || col >= g.cols) throw PlacementError("place_on_grid: cell out of range");
    if (is_placed_on_grid(g, macro.id)) throw PlacementError("macro '" + macro.name + "' is already placed");
    if (!fits_canvas(g, macro, row, col))
        throw PlacementError("macro '" + macro.name + "' does not fit the canvas at (" + std::to_string(row) + ", " + std::to_string(col) + ")");
    const auto f = footprint_range(g, macro, row, col);
    for (int i = f.row0; i <= f.row1; ++i)
        for (int j = f.col0; j <= f.col1; ++j)
            if (g.occupied(i, j))
                throw PlacementError("macro '" + macro.name + "' overlaps a placed macro at (" + std::to_string(row) + ", " + std::to_string(col) + ")");
    for (int i = f.row0; i <= f.row1; ++i)
        for (int j = f.col0; j <= f.col1; ++j) g.occupancy[static_cast<std::size_t>(g.index(i, j))] = 1;
    g.placed_macros.push_back({macro.id, row, col});
    return g;
}

/// Continuous center for a macro on (row, col), clamped into the canvas.
inline Point grid_position(const Grid& g, const Netlist& nl, const Node& macro, int row, int col) {
    return clamp_to_canvas(nl, macro, g.cell_center(row, col));
}

/// Writes the continuous positions of every placed macro into `pl`.
inline void apply_grid_positions(const Grid& g, const Netlist& nl, Placement& pl) {
    for (const auto& pm : g.placed_macros) {
        const auto& node = nl.nodes[static_cast<std::size_t>(pm.node)];
        pl.set(pm.node, grid_position(g, nl, node, pm.row, pm.col));
    }
}

}  // namespace macroplace
