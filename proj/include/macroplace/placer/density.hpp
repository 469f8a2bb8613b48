#pragma once

// Electrostatic density model. Node area is rasterized onto a bins x bins
// grid, and the potential psi solves  lap(psi) = -(rho - mean(rho))  with
// zero-flux boundaries via a cosine expansion.

#include "macroplace/netlist.hpp"
#include "macroplace/placer/dct.hpp"
#include "macroplace/placer/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace macroplace::placer {

struct DensityField {
    int rows = 0;
    int cols = 0;
    double bin_w = 0.0;
    double bin_h = 0.0;
    /// Area density (area / bin area), row-major.
    std::vector<double> rho;
    std::vector<double> psi;
    /// Field -grad(psi), central differences with reflecting boundaries.
    std::vector<double> ex;
    std::vector<double> ey;
    double energy = 0.0;

    double bin_area() const { return bin_w * bin_h; }
    std::size_t at(int r, int c) const { return static_cast<std::size_t>(r * cols + c); }
};

namespace detail {

inline int bin_of(double v, double size, int n) { return std::clamp(static_cast<int>(std::floor(v / size)), 0, n - 1); }

}  // namespace detail

/// Weighted overlap area of placed nodes per bin (row-major); `fill(node)`
/// is the fraction of each node's box that carries area (0 skips the node).
template <class Fill>
std::vector<double> rasterize(const Netlist& nl, const Placement& pl, int rows, int cols, Fill fill) {
    const double bw = nl.canvas_width / cols, bh = nl.canvas_height / rows;
    std::vector<double> a(static_cast<std::size_t>(rows * cols), 0.0);
    for (const auto& node : nl.nodes) {
        if (!pl.is_placed(node.id)) continue;
        const double w = fill(node);
        if (w <= 0.0) continue;
        const Rect r = node_rect(node, pl.at(node.id));
        const int c0 = detail::bin_of(r.lx, bw, cols), c1 = detail::bin_of(r.ux, bw, cols);
        const int r0 = detail::bin_of(r.ly, bh, rows), r1 = detail::bin_of(r.uy, bh, rows);
        for (int i = r0; i <= r1; ++i) {
            const double oy = overlap_length(r.ly, r.uy, i * bh, (i + 1) * bh);
            if (oy <= 0.0) continue;
            for (int j = c0; j <= c1; ++j) a[static_cast<std::size_t>(i * cols + j)] += w * oy * overlap_length(r.lx, r.ux, j * bw, (j + 1) * bw);
        }
    }
    return a;
}

/// Charge geometry seen by the density model. Movable std-cell clusters
/// stand for cells spread at the target density, so each is modeled as a
/// square of side sqrt(area / td) filled at density td; macros are solid.
struct ChargeModel {
    Netlist geometry;
    std::vector<double> fill;
    std::vector<char> movable;
};

inline ChargeModel charge_model(const Netlist& nl, const std::vector<char>& movable, bool spread_clusters = true) {
    ChargeModel m{nl, std::vector<double>(nl.nodes.size(), 0.0), movable};
    const double td = nl.target_density;
    for (auto& node : m.geometry.nodes) {
        if (node.kind == NodeKind::terminal) continue;
        auto& f = m.fill[static_cast<std::size_t>(node.id)];
        f = 1.0;
        if (spread_clusters && movable[static_cast<std::size_t>(node.id)] && node.kind == NodeKind::std_cell && td < 1.0) {
            const double s = 1.0 / std::sqrt(td);
            node.width = std::min(node.width * s, nl.canvas_width);
            node.height = std::min(node.height * s, nl.canvas_height);
            f = nl.nodes[static_cast<std::size_t>(node.id)].area() / node.area();
        }
    }
    return m;
}

/// Spectral Poisson solver for a fixed bin grid.
class PoissonSolver {
public:
    PoissonSolver(int rows, int cols, double bin_w, double bin_h, PoissonSpectrum spectrum)
        : dct_(rows, cols), bin_w_(bin_w), bin_h_(bin_h), spectrum_(spectrum), inv_eig_(static_cast<std::size_t>(rows * cols), 0.0) {
        const double pi = std::numbers::pi;
        for (int u = 0; u < rows; ++u) {
            for (int v = 0; v < cols; ++v) {
                double lam = 0.0;
                if (spectrum == PoissonSpectrum::discrete) {
                    const double sy = std::sin(pi * u / (2.0 * rows)), sx = std::sin(pi * v / (2.0 * cols));
                    lam = 4.0 * sx * sx / (bin_w * bin_w) + 4.0 * sy * sy / (bin_h * bin_h);
                } else {
                    const double ky = pi * u / (rows * bin_h), kx = pi * v / (cols * bin_w);
                    lam = kx * kx + ky * ky;
                }
                inv_eig_[static_cast<std::size_t>(u * cols + v)] = (u == 0 && v == 0) ? 0.0 : 1.0 / lam;
            }
        }
    }

    int rows() const { return dct_.rows(); }
    int cols() const { return dct_.cols(); }
    double bin_w() const { return bin_w_; }
    double bin_h() const { return bin_h_; }
    PoissonSpectrum spectrum() const { return spectrum_; }

    /// Zero-mean psi with lap(psi) = -(rho - mean(rho)).
    std::vector<double> solve(const std::vector<double>& rho) {
        auto coef = dct_.forward(rho);
        for (std::size_t k = 0; k < coef.size(); ++k) coef[k] *= inv_eig_[k];
        return dct_.inverse(coef);
    }

private:
    Dct2D dct_;
    double bin_w_;
    double bin_h_;
    PoissonSpectrum spectrum_;
    std::vector<double> inv_eig_;
};

/// 5-point Laplacian with reflecting (zero-flux) boundaries.
inline std::vector<double> discrete_laplacian(const std::vector<double>& f, int rows, int cols, double bin_w, double bin_h) {
    std::vector<double> out(f.size());
    auto F = [&](int r, int c) {
        r = std::clamp(r, 0, rows - 1);
        c = std::clamp(c, 0, cols - 1);
        return f[static_cast<std::size_t>(r * cols + c)];
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double x = F(r, c);
            out[static_cast<std::size_t>(r * cols + c)] = (F(r, c - 1) - 2 * x + F(r, c + 1)) / (bin_w * bin_w) + (F(r - 1, c) - 2 * x + F(r + 1, c)) / (bin_h * bin_h);
        }
    return out;
}

/// max |lap(psi) + rho - mean(rho)| / max |rho - mean(rho)| with the discrete Laplacian.
inline double poisson_residual(const DensityField& f) {
    const auto lap = discrete_laplacian(f.psi, f.rows, f.cols, f.bin_w, f.bin_h);
    double mean = 0.0;
    for (double v : f.rho) mean += v;
    mean /= static_cast<double>(f.rho.size());
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < lap.size(); ++k) {
        num = std::max(num, std::abs(lap[k] + f.rho[k] - mean));
        den = std::max(den, std::abs(f.rho[k] - mean));
    }
    return den > 0.0 ? num / den : num;
}

/// Field from a density map: psi, E = -grad(psi), energy = 1/2 sum rho psi bin_area.
/// With `with_field` false, ex and ey are left empty.
inline DensityField solve_density_field(PoissonSolver& solver, std::vector<double> rho, bool with_field = true) {
    DensityField f;
    f.rows = solver.rows();
    f.cols = solver.cols();
    f.bin_w = solver.bin_w();
    f.bin_h = solver.bin_h();
    f.rho = std::move(rho);
    f.psi = solver.solve(f.rho);
    if (with_field) {
        f.ex.assign(f.psi.size(), 0.0);
        f.ey.assign(f.psi.size(), 0.0);
        auto P = [&](int r, int c) { return f.psi[f.at(std::clamp(r, 0, f.rows - 1), std::clamp(c, 0, f.cols - 1))]; };
        for (int r = 0; r < f.rows; ++r)
            for (int c = 0; c < f.cols; ++c) {
                f.ex[f.at(r, c)] = -(P(r, c + 1) - P(r, c - 1)) / (2.0 * f.bin_w);
                f.ey[f.at(r, c)] = -(P(r + 1, c) - P(r - 1, c)) / (2.0 * f.bin_h);
            }
    }
    double e = 0.0;
    for (std::size_t k = 0; k < f.rho.size(); ++k) e += f.rho[k] * f.psi[k];
    f.energy = 0.5 * e * f.bin_area();
    return f;
}

/// Density map of every placed non-terminal node under the charge model.
inline std::vector<double> density_map(const ChargeModel& cm, const Placement& pl, int rows, int cols) {
    auto a = rasterize(cm.geometry, pl, rows, cols, [&](const Node& n) { return cm.fill[static_cast<std::size_t>(n.id)]; });
    const double inv = 1.0 / ((cm.geometry.canvas_width / cols) * (cm.geometry.canvas_height / rows));
    for (double& v : a) v *= inv;
    return a;
}

/// Density map with every node solid.
inline std::vector<double> density_map(const Netlist& nl, const Placement& pl, int rows, int cols) {
    return density_map(charge_model(nl, std::vector<char>(nl.nodes.size(), 0), false), pl, rows, cols);
}

inline DensityField solve_density_field(const ChargeModel& cm, const Placement& pl, PoissonSolver& solver, bool with_field = true) {
    return solve_density_field(solver, density_map(cm, pl, solver.rows(), solver.cols()), with_field);
}

inline DensityField solve_density_field(const Netlist& nl, const Placement& pl, PoissonSolver& solver) {
    return solve_density_field(solver, density_map(nl, pl, solver.rows(), solver.cols()));
}

struct DensityEnergy {
    DensityField field;
    /// d energy / d center, zero for nodes that are not movable.
    std::vector<Point> grad;
};

namespace detail {

/// d(overlap of [lo, hi] with bin j)/d(shift) summed against psi along one axis:
/// +psi at the bin holding `hi`, -psi at the bin holding `lo`.
inline void edge_bins(double lo, double hi, double size, int n, int& j_lo, int& j_hi, bool& lo_inside, bool& hi_inside) {
    j_lo = bin_of(lo, size, n);
    j_hi = bin_of(hi, size, n);
    lo_inside = lo > j_lo * size && lo < (j_lo + 1) * size;
    hi_inside = hi > j_hi * size && hi < (j_hi + 1) * size;
}

}  // namespace detail

/// Energy and its exact gradient  d/dx sum_b psi_b * fill * overlap_b(x)
/// for the movable nodes.
inline DensityEnergy density_energy_and_grad(const ChargeModel& cm, const Placement& pl, PoissonSolver& solver) {
    const Netlist& nl = cm.geometry;
    DensityEnergy out;
    out.field = solve_density_field(cm, pl, solver, false);
    const auto& f = out.field;
    out.grad.assign(nl.nodes.size(), Point{});
    for (const auto& node : nl.nodes) {
        if (!cm.movable[static_cast<std::size_t>(node.id)] || !pl.is_placed(node.id) || node.kind == NodeKind::terminal) continue;
        const Rect r = node_rect(node, pl.at(node.id));
        int jl, jh, il, ih;
        bool lx_in, ux_in, ly_in, uy_in;
        detail::edge_bins(r.lx, r.ux, f.bin_w, f.cols, jl, jh, lx_in, ux_in);
        detail::edge_bins(r.ly, r.uy, f.bin_h, f.rows, il, ih, ly_in, uy_in);
        Point g;
        for (int i = il; i <= ih; ++i) {
            const double oy = overlap_length(r.ly, r.uy, i * f.bin_h, (i + 1) * f.bin_h);
            if (oy <= 0.0) continue;
            if (ux_in) g.x += oy * f.psi[f.at(i, jh)];
            if (lx_in) g.x -= oy * f.psi[f.at(i, jl)];
        }
        for (int j = jl; j <= jh; ++j) {
            const double ox = overlap_length(r.lx, r.ux, j * f.bin_w, (j + 1) * f.bin_w);
            if (ox <= 0.0) continue;
            if (uy_in) g.y += ox * f.psi[f.at(ih, j)];
            if (ly_in) g.y -= ox * f.psi[f.at(il, j)];
        }
        const double w = cm.fill[static_cast<std::size_t>(node.id)];
        out.grad[static_cast<std::size_t>(node.id)] = {w * g.x, w * g.y};
    }
    return out;
}

/// Gradient with solid nodes.
inline DensityEnergy density_energy_and_grad(const Netlist& nl, const Placement& pl, const std::vector<char>& movable, PoissonSolver& solver) {
    return density_energy_and_grad(charge_model(nl, movable, false), pl, solver);
}

/// Movable area above the per-bin capacity max(0, td * bin_area - fixed area),
/// over total movable area.
inline double bin_overflow(const ChargeModel& cm, const Placement& pl, int rows, int cols, double target_density) {
    const Netlist& nl = cm.geometry;
    auto part = [&](bool mov) {
        return rasterize(nl, pl, rows, cols, [&](const Node& n) { return (cm.movable[static_cast<std::size_t>(n.id)] != 0) == mov ? cm.fill[static_cast<std::size_t>(n.id)] : 0.0; });
    };
    const auto mov = part(true);
    const auto fix = part(false);
    const double ab = (nl.canvas_width / cols) * (nl.canvas_height / rows);
    double total = 0.0, over = 0.0;
    for (std::size_t k = 0; k < mov.size(); ++k) {
        total += mov[k];
        over += std::max(0.0, mov[k] - std::max(0.0, target_density * ab - fix[k]));
    }
    return total > 0.0 ? over / total : 0.0;
}

/// Overflow with the spread-cluster charge model.
inline double bin_overflow(const Netlist& nl, const Placement& pl, const std::vector<char>& movable, int rows, int cols, double target_density) {
    return bin_overflow(charge_model(nl, movable), pl, rows, cols, target_density);
}

}  // namespace macroplace::placer
