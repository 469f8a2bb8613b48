#pragma once

// Shallow policy/value network over a graph embedding of the reduced netlist.
// Every parameter lives in a named Tensor so optimizers, checkpoints and
// gradient checks can walk them uniformly.

#include "macroplace/env.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace macroplace::agent {

inline constexpr int kFeatureCount = 10;
inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr int kPatchSize = 9;
/// Per-cell offset (dx, dy, distance) to the current macro's placed neighbors.
inline constexpr int kPullSize = 3;

struct Arch {
    int features = kFeatureCount;
    /// Embedding width D; also the trunk and hidden widths.
    int dim = 16;
    /// Propagation rounds R.
    int rounds = 2;
    int rows = 16;
    int cols = 16;

    int cells() const { return rows * cols; }

    friend bool operator==(const Arch&, const Arch&) = default;
};

/// Column-major real array with a name and shape.
struct Tensor {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Eigen::Map<Eigen::MatrixXd> mat() { return {data.data(), rows, cols}; }
    Eigen::Map<const Eigen::MatrixXd> mat() const { return {data.data(), rows, cols}; }
    Eigen::Map<Eigen::VectorXd> vec() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
    Eigen::Map<const Eigen::VectorXd> vec() const { return {data.data(), static_cast<Eigen::Index>(data.size())}; }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Parameter groups. Embedding round r owns tensors 3r..3r+2; the heads follow.
class Params {
public:
    enum Head { trunk_w, trunk_b, score_trunk, score_patch, score_xy, score_pull, score_b, score_out, cell_bias, value_w, value_b, value_out, value_out_b, head_count };

    Arch arch;
    std::vector<Tensor> tensors;

    static Params zeros(const Arch& a) {
        if (a.features < 1 || a.dim < 1 || a.rounds < 1 || a.rows < 1 || a.cols < 1) throw ArgumentError("network: architecture sizes must be positive");
        Params p;
        p.arch = a;
        auto add = [&](std::string name, int r, int c) {
            p.tensors.push_back({std::move(name), r, c, std::vector<double>(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0)});
        };
        for (int r = 0; r < a.rounds; ++r) {
            const int in = r == 0 ? a.features : a.dim;
            add("embed" + std::to_string(r) + ".self", a.dim, in);
            add("embed" + std::to_string(r) + ".neighbor", a.dim, in);
            add("embed" + std::to_string(r) + ".bias", a.dim, 1);
        }
        add("trunk.weight", a.dim, 2 * a.dim);
        add("trunk.bias", a.dim, 1);
        add("score.trunk", a.dim, a.dim);
        add("score.patch", a.dim, kPatchSize);
        add("score.xy", a.dim, 2);
        add("score.pull", a.dim, kPullSize);
        add("score.bias", a.dim, 1);
        add("score.out", a.dim, 1);
        add("score.cell_bias", a.cells(), 1);
        add("value.weight", a.dim, a.dim + 2);
        add("value.bias", a.dim, 1);
        add("value.out", a.dim, 1);
        add("value.out_bias", 1, 1);
        return p;
    }

    /// Scaled-normal weights (1/sqrt(fan_in)), zero biases, and a small
    /// policy output layer so the first policy is close to uniform.
    static Params init(const Arch& a, std::uint64_t seed) {
        Params p = zeros(a);
        Rng rng(seed);
        for (auto& t : p.tensors) {
            if (t.cols == 1 && t.name != "score.out" && t.name != "value.out") continue;
            const double fan_in = t.cols == 1 ? t.rows : t.cols;
            double scale = 1.0 / std::sqrt(fan_in);
            if (t.name == "score.out") scale *= 0.1;
            for (double& v : t.data) v = scale * rng.normal();
        }
        return p;
    }

    Tensor& head(Head h) { return tensors[static_cast<std::size_t>(3 * arch.rounds + h)]; }
    const Tensor& head(Head h) const { return tensors[static_cast<std::size_t>(3 * arch.rounds + h)]; }
    Tensor& self(int r) { return tensors[static_cast<std::size_t>(3 * r)]; }
    const Tensor& self(int r) const { return tensors[static_cast<std::size_t>(3 * r)]; }
    Tensor& neighbor(int r) { return tensors[static_cast<std::size_t>(3 * r + 1)]; }
    const Tensor& neighbor(int r) const { return tensors[static_cast<std::size_t>(3 * r + 1)]; }
    Tensor& embed_bias(int r) { return tensors[static_cast<std::size_t>(3 * r + 2)]; }
    const Tensor& embed_bias(int r) const { return tensors[static_cast<std::size_t>(3 * r + 2)]; }

    bool is_value_tensor(std::size_t i) const { return i >= static_cast<std::size_t>(3 * arch.rounds + value_w); }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& t : tensors) n += t.data.size();
        return n;
    }

    bool finite() const {
        for (const auto& t : tensors)
            for (double v : t.data)
                if (!std::isfinite(v)) return false;
        return true;
    }

    void set_zero() {
        for (auto& t : tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
    }

    friend bool operator==(const Params&, const Params&) = default;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row-normalized weighted adjacency: row i averages the neighbors of i.
/// Isolated nodes get an empty row, so their neighbor term is zero.
inline SparseMatrix mean_adjacency(const AdjacencyGraph& g) {
    std::vector<double> deg(static_cast<std::size_t>(g.node_count), 0.0);
    for (const auto& e : g.edges) {
        deg[static_cast<std::size_t>(e.i)] += e.w;
        deg[static_cast<std::size_t>(e.j)] += e.w;
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * g.edges.size());
    for (const auto& e : g.edges) {
        trips.emplace_back(e.i, e.j, e.w / deg[static_cast<std::size_t>(e.i)]);
        trips.emplace_back(e.j, e.i, e.w / deg[static_cast<std::size_t>(e.j)]);
    }
    SparseMatrix m(g.node_count, g.node_count);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

/// Per-design inputs that never change during an episode.
struct DesignContext {
    std::shared_ptr<const EnvDesign> design;
    /// Node features with the placed flag and position zeroed (N x F).
    Eigen::MatrixXd static_features;
    SparseMatrix adjacency;
    SparseMatrix adjacency_t;
    /// Cell centers scaled to [-1, 1] (2 x cells).
    Eigen::MatrixXd cell_xy;
};

inline DesignContext make_context(std::shared_ptr<const EnvDesign> d) {
    DesignContext ctx;
    const Netlist& nl = d->reduced();
    const auto n = static_cast<Eigen::Index>(nl.nodes.size());
    ctx.static_features = Eigen::MatrixXd::Zero(n, kFeatureCount);
    std::vector<double> deg(nl.nodes.size(), 0.0);
    for (const auto& e : d->graph.edges) {
        deg[static_cast<std::size_t>(e.i)] += e.w;
        deg[static_cast<std::size_t>(e.j)] += e.w;
    }
    const double max_deg = std::max(1e-12, *std::max_element(deg.begin(), deg.end()));
    for (const auto& node : nl.nodes) {
        const auto i = static_cast<Eigen::Index>(node.id);
        ctx.static_features(i, static_cast<int>(node.kind)) = 1.0;
        ctx.static_features(i, 3) = std::min(1.0, node.width / nl.canvas_width);
        ctx.static_features(i, 4) = std::min(1.0, node.height / nl.canvas_height);
        ctx.static_features(i, 5) = std::min(1.0, node.area() / nl.canvas_area());
        ctx.static_features(i, 6) = deg[static_cast<std::size_t>(node.id)] / max_deg;
    }
    ctx.adjacency = mean_adjacency(d->graph);
    ctx.adjacency_t = ctx.adjacency.transpose();
    ctx.cell_xy.resize(2, d->rows * d->cols);
    for (int r = 0; r < d->rows; ++r)
        for (int c = 0; c < d->cols; ++c) {
            ctx.cell_xy(0, r * d->cols + c) = (2.0 * c + 1.0) / d->cols - 1.0;
            ctx.cell_xy(1, r * d->cols + c) = (2.0 * r + 1.0) / d->rows - 1.0;
        }
    ctx.design = std::move(d);
    return ctx;
}

/// Full feature matrix for the nodes placed in `placed`.
inline Eigen::MatrixXd node_features(const DesignContext& ctx, const Placement& placed) {
    Eigen::MatrixXd x = ctx.static_features;
    const Netlist& nl = ctx.design->reduced();
    for (const auto& node : nl.nodes) {
        if (!placed.is_placed(node.id)) continue;
        const auto i = static_cast<Eigen::Index>(node.id);
        const Point p = placed.at(node.id);
        x(i, 7) = 1.0;
        x(i, 8) = std::clamp(2.0 * p.x / nl.canvas_width - 1.0, -1.0, 1.0);
        x(i, 9) = std::clamp(2.0 * p.y / nl.canvas_height - 1.0, -1.0, 1.0);
    }
    return x;
}

/// 3x3 occupancy neighborhood of `cell`; cells off the grid count as occupied.
inline void occupancy_patch(const std::vector<char>& occ, int rows, int cols, int cell, double* out) {
    const int r0 = cell / cols, c0 = cell % cols;
    int k = 0;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc, ++k) {
            const int r = r0 + dr, c = c0 + dc;
            out[k] = (r < 0 || r >= rows || c < 0 || c >= cols) ? 1.0 : (occ[static_cast<std::size_t>(r * cols + c)] ? 1.0 : 0.0);
        }
}

/// Offset from each cell to the connection-weighted centroid of the placed
/// neighbors of `node`, halved so it stays in [-1, 1], plus its length
/// scaled into [0, 1]. All zero when no neighbor is placed yet.
inline Eigen::MatrixXd pull_features(const DesignContext& ctx, const Placement& placed, int node) {
    const Netlist& nl = ctx.design->reduced();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kPullSize, ctx.cell_xy.cols());
    double w = 0.0, px = 0.0, py = 0.0;
    for (SparseMatrix::InnerIterator it(ctx.adjacency, node); it; ++it) {
        const int j = static_cast<int>(it.col());
        if (!placed.is_placed(j)) continue;
        w += it.value();
        px += it.value() * (2.0 * placed.at(j).x / nl.canvas_width - 1.0);
        py += it.value() * (2.0 * placed.at(j).y / nl.canvas_height - 1.0);
    }
    if (!(w > 0.0)) return out;
    px /= w;
    py /= w;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double dx = 0.5 * (ctx.cell_xy(0, c) - px), dy = 0.5 * (ctx.cell_xy(1, c) - py);
        out(0, c) = dx;
        out(1, c) = dy;
        out(2, c) = std::sqrt(0.5 * (dx * dx + dy * dy));
    }
    return out;
}

struct Embedding {
    /// h[0] is the feature matrix; h[r + 1] the output of round r (N x width).
    std::vector<Eigen::MatrixXd> h;
    /// Neighbor means feeding round r.
    std::vector<Eigen::MatrixXd> m;
    Eigen::VectorXd global;

    const Eigen::MatrixXd& out() const { return h.back(); }
};

/// R rounds of h <- tanh(h W_self^T + (A h) W_nbr^T + b), then the node mean.
inline Embedding embed(const SparseMatrix& adjacency, const Eigen::MatrixXd& x, const Params& p) {
    if (x.cols() != p.arch.features) throw ArgumentError("embed: feature width " + std::to_string(x.cols()) + " does not match the parameters");
    if (adjacency.rows() != x.rows() || adjacency.cols() != x.rows()) throw ArgumentError("embed: adjacency does not match the node count");
    Embedding e;
    e.h.push_back(x);
    for (int r = 0; r < p.arch.rounds; ++r) {
        e.m.push_back(adjacency * e.h.back());
        Eigen::MatrixXd z = e.h.back() * p.self(r).mat().transpose() + e.m.back() * p.neighbor(r).mat().transpose();
        z.rowwise() += p.embed_bias(r).vec().transpose();
        e.h.push_back(z.array().tanh().matrix());
    }
    e.global = x.rows() > 0 ? Eigen::VectorXd(e.out().colwise().mean().transpose()) : Eigen::VectorXd::Zero(p.arch.dim);
    return e;
}

/// Softmax over the feasible cells; infeasible cells get probability exactly 0.
inline Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const std::vector<char>& mask) {
    if (static_cast<std::size_t>(logits.size()) != mask.size()) throw ArgumentError("masked_softmax: mask size does not match the logits");
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logits.size(); ++i)
        if (mask[static_cast<std::size_t>(i)]) hi = std::max(hi, logits[i]);
    if (hi == -std::numeric_limits<double>::infinity()) throw ContractError("masked_softmax: no feasible cell");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
    double z = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i)
        if (mask[static_cast<std::size_t>(i)]) z += (p[i] = std::exp(logits[i] - hi));
    return p / z;
}

/// Intermediate values of one policy/value evaluation, kept for backprop.
struct Forward {
    Embedding emb;
    int macro = -1;
    Eigen::VectorXd trunk_in;
    Eigen::VectorXd trunk;
    Eigen::MatrixXd patch;
    Eigen::MatrixXd pull;
    Eigen::MatrixXd hidden;
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    std::vector<char> mask;
    Eigen::VectorXd value_in;
    Eigen::VectorXd value_hidden;
    double value = 0.0;
};

inline Forward forward(const Params& p, const DesignContext& ctx, const Observation& obs) {
    const EnvDesign& d = *ctx.design;
    if (p.arch.rows != d.rows || p.arch.cols != d.cols) throw ArgumentError("network: parameters are for a different grid");
    if (obs.macro < 0) throw ContractError("network: observation has no macro to place");
    Forward f;
    f.emb = embed(ctx.adjacency, node_features(ctx, obs.placed), p);
    f.macro = d.reduced_id(obs.macro);
    const int dim = p.arch.dim, cells = p.arch.cells();

    f.trunk_in.resize(2 * dim);
    f.trunk_in << f.emb.out().row(f.macro).transpose(), f.emb.global;
    f.trunk = (p.head(Params::trunk_w).mat() * f.trunk_in + p.head(Params::trunk_b).vec()).array().tanh().matrix();

    f.patch.resize(kPatchSize, cells);
    for (int c = 0; c < cells; ++c) occupancy_patch(obs.occupancy, d.rows, d.cols, c, f.patch.col(c).data());
    f.pull = pull_features(ctx, obs.placed, f.macro);
    Eigen::MatrixXd pre = p.head(Params::score_patch).mat() * f.patch + p.head(Params::score_xy).mat() * ctx.cell_xy + p.head(Params::score_pull).mat() * f.pull;
    const Eigen::VectorXd shared = p.head(Params::score_trunk).mat() * f.trunk + p.head(Params::score_b).vec();
    pre.colwise() += shared;
    f.hidden = pre.array().tanh().matrix();
    f.logits = f.hidden.transpose() * p.head(Params::score_out).vec() + p.head(Params::cell_bias).vec();
    f.mask = obs.mask.feasible;
    f.probs = masked_softmax(f.logits, f.mask);

    int filled = 0;
    for (char o : obs.occupancy) filled += o ? 1 : 0;
    f.value_in.resize(dim + 2);
    f.value_in << f.emb.global, static_cast<double>(filled) / cells, static_cast<double>(obs.step) / static_cast<double>(d.macro_order.size());
    f.value_hidden = (p.head(Params::value_w).mat() * f.value_in + p.head(Params::value_b).vec()).array().tanh().matrix();
    f.value = p.head(Params::value_out).vec().dot(f.value_hidden) + p.head(Params::value_out_b).data[0];
    return f;
}

inline PolicyOutput to_policy_output(const Forward& f) {
    return {std::vector<double>(f.probs.data(), f.probs.data() + f.probs.size()), f.value};
}

/// Accumulates into `g` the gradient of a loss whose derivatives with
/// respect to the logits and the value estimate are given.
inline void backward(const Params& p, const DesignContext& ctx, const Forward& f, const Eigen::VectorXd& dlogits, double dvalue, Params& g) {
    const int dim = p.arch.dim;
    // Policy head.
    g.head(Params::score_out).vec() += f.hidden * dlogits;
    g.head(Params::cell_bias).vec() += dlogits;
    const Eigen::MatrixXd dpre = ((p.head(Params::score_out).vec() * dlogits.transpose()).array() * (1.0 - f.hidden.array().square())).matrix();
    g.head(Params::score_patch).mat() += dpre * f.patch.transpose();
    g.head(Params::score_xy).mat() += dpre * ctx.cell_xy.transpose();
    g.head(Params::score_pull).mat() += dpre * f.pull.transpose();
    const Eigen::VectorXd dshared = dpre.rowwise().sum();
    g.head(Params::score_b).vec() += dshared;
    g.head(Params::score_trunk).mat() += dshared * f.trunk.transpose();
    const Eigen::VectorXd dtrunk = p.head(Params::score_trunk).mat().transpose() * dshared;
    const Eigen::VectorXd dtz = (dtrunk.array() * (1.0 - f.trunk.array().square())).matrix();
    g.head(Params::trunk_w).mat() += dtz * f.trunk_in.transpose();
    g.head(Params::trunk_b).vec() += dtz;
    const Eigen::VectorXd dtrunk_in = p.head(Params::trunk_w).mat().transpose() * dtz;

    // Value head.
    g.head(Params::value_out).vec() += dvalue * f.value_hidden;
    g.head(Params::value_out_b).data[0] += dvalue;
    const Eigen::VectorXd dvz = (dvalue * p.head(Params::value_out).vec().array() * (1.0 - f.value_hidden.array().square())).matrix();
    g.head(Params::value_w).mat() += dvz * f.value_in.transpose();
    g.head(Params::value_b).vec() += dvz;
    const Eigen::VectorXd dvalue_in = p.head(Params::value_w).mat().transpose() * dvz;

    // Embedding: the global mean spreads evenly, the macro row takes its own share.
    const Eigen::VectorXd dglobal = dtrunk_in.tail(dim) + dvalue_in.head(dim);
    const auto n = f.emb.out().rows();
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, dim);
    if (n > 0) dh.rowwise() += (dglobal / static_cast<double>(n)).transpose();
    dh.row(f.macro) += dtrunk_in.head(dim).transpose();
    for (int r = p.arch.rounds - 1; r >= 0; --r) {
        const Eigen::MatrixXd& h_out = f.emb.h[static_cast<std::size_t>(r + 1)];
        const Eigen::MatrixXd dz = (dh.array() * (1.0 - h_out.array().square())).matrix();
        g.self(r).mat() += dz.transpose() * f.emb.h[static_cast<std::size_t>(r)];
        g.neighbor(r).mat() += dz.transpose() * f.emb.m[static_cast<std::size_t>(r)];
        g.embed_bias(r).vec() += dz.colwise().sum().transpose();
        if (r > 0) dh = dz * p.self(r).mat() + ctx.adjacency_t * (dz * p.neighbor(r).mat());
    }
}

struct LossWeights {
    double value = 0.5;
    double entropy = 0.01;
};

struct StepLoss {
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;

    double total(const LossWeights& w) const { return policy + w.value * value - w.entropy * entropy; }
};

/// -A log pi(a) + c_v (R - V)^2 - beta H(pi) for one step. The advantage is
/// a constant; when `g` is given the gradient is accumulated with `scale`.
inline StepLoss step_loss(const Params& p, const DesignContext& ctx, const Forward& f, int action, double advantage, double ret,
                          const LossWeights& w, Params* g = nullptr, double scale = 1.0) {
    const auto a = static_cast<Eigen::Index>(action);
    if (!(f.probs[a] > 0.0)) throw ContractError("step_loss: action has zero probability");
    StepLoss l;
    l.policy = -advantage * std::log(f.probs[a]);
    for (Eigen::Index i = 0; i < f.probs.size(); ++i)
        if (f.probs[i] > 0.0) l.entropy -= f.probs[i] * std::log(f.probs[i]);
    l.value = (ret - f.value) * (ret - f.value);
    if (!g) return l;
    Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(f.probs.size());
    for (Eigen::Index i = 0; i < f.probs.size(); ++i) {
        if (!(f.probs[i] > 0.0)) continue;
        const double pi = f.probs[i];
        dlogits[i] = advantage * pi + w.entropy * pi * (std::log(pi) + l.entropy);
    }
    dlogits[a] -= advantage;
    const double dvalue = -2.0 * w.value * (ret - f.value);
    backward(p, ctx, f, scale * dlogits, scale * dvalue, *g);
    return l;
}

/// Rollout policy backed by the network; `trace` receives every forward pass.
inline Policy make_policy(const Params& p, const DesignContext& ctx, std::vector<Forward>* trace = nullptr) {
    return [&p, &ctx, trace](const Observation& obs) {
        Forward f = forward(p, ctx, obs);
        PolicyOutput out = to_policy_output(f);
        if (trace) trace->push_back(std::move(f));
        return out;
    };
}

}  // namespace macroplace::agent
