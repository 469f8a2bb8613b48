#pragma once

#include "macroplace/netlist.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace macroplace::placer {

enum class Engine { force_directed, analytical };

inline std::string_view to_string(Engine e) { return e == Engine::force_directed ? "fd" : "analytical"; }

enum class Lambda0Strategy {
    /// lambda chosen so that |lambda * grad(energy)|_1 == |grad(wl)|_1.
    gradient_ratio,
    /// lambda0 taken from PlacerConfig::lambda0.
    fixed,
};

/// Force-directed spreading step.
enum class Spreading {
    /// Recursive bisection of the free capacity.
    bisection,
    /// Bin-boundary cell shifting.
    cell_shift,
};

/// Eigenvalues used by the spectral Poisson solve.
enum class PoissonSpectrum {
    /// Exact inverse of the 5-point Laplacian with reflecting boundaries.
    discrete,
    /// Continuous Laplacian (pi*u/W)^2 sampled at bin centers.
    continuous,
};

struct PlacerConfig {
    Engine engine = Engine::analytical;
    int max_outer_iters = 30;
    double overflow_stop = 0.10;
    /// Wirelength smoothing in microns; 0 selects 4 x bin size.
    double gamma = 0.0;
    double gamma_decay = 0.8;
    double gamma_floor_bins = 0.5;
    Lambda0Strategy lambda0_strategy = Lambda0Strategy::gradient_ratio;
    double lambda0 = 1.0;
    double lambda_growth = 2.0;
    int inner_iters = 20;
    int max_backtracks = 8;
    /// Fallback step as a fraction of the canvas, used when backtracking fails.
    double fallback_step = 1e-2;
    /// Density bins per side (power of two).
    int bins = 64;
    PoissonSpectrum spectrum = PoissonSpectrum::discrete;
    /// Initial jitter around the canvas center, fraction of the canvas.
    double init_jitter = 0.01;
    std::uint64_t seed = 1;
    bool use_pin_offsets = false;
    Spreading spreading = Spreading::bisection;
    /// Force-directed spreading bins per side.
    int spread_bins = 16;
    /// Cell-shifting rounds per force-directed iteration.
    int spread_passes = 8;
    /// Anchor weight growth per force-directed iteration, relative to the
    /// mean connection weight of a movable node.
    double anchor_weight = 1.0;
    /// Record the Poisson residual of every outer iteration in the trace.
    bool check_poisson = false;
};

struct TraceRow {
    int iteration = 0;
    double wl = 0.0;
    double energy = 0.0;
    double overflow = 0.0;
    double lambda = 0.0;
    double poisson_residual = 0.0;
};

struct PlaceResult {
    Placement placement;
    std::vector<TraceRow> trace;
    std::vector<std::string> warnings;
};

/// Netlist, a complete starting placement and the movable set.
struct Problem {
    const Netlist* netlist = nullptr;
    Placement initial;
    std::vector<char> movable;

    int movable_count() const {
        int n = 0;
        for (char m : movable) n += m ? 1 : 0;
        return n;
    }
};

inline std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "iteration,wl,energy,overflow,lambda,poisson_residual\n";
    for (const auto& r : trace) {
        out += std::to_string(r.iteration) + "," + format_double(r.wl) + "," + format_double(r.energy) + "," + format_double(r.overflow) + "," +
               format_double(r.lambda) + "," + format_double(r.poisson_residual) + "\n";
    }
    return out;
}

}  // namespace macroplace::placer
