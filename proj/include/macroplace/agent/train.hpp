#pragma once

// REINFORCE with a learned value baseline, Adam updates, checkpoints and the
// learning-curve CSV.

#include "macroplace/agent/network.hpp"
#include "macroplace/json_io.hpp"

#include <filesystem>
#include <optional>
#include <sstream>
#include <thread>

namespace macroplace::agent {

class Adam {
public:
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit Adam(const Params& shape, double lr = 0.01) : learning_rate(lr), m_(Params::zeros(shape.arch)), v_(Params::zeros(shape.arch)) {}

    /// One step on every tensor for which `active(i)` holds.
    template <class Pred>
    void step(Params& p, const Params& g, Pred active) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, t_), c2 = 1.0 - std::pow(beta2, t_);
        for (std::size_t i = 0; i < p.tensors.size(); ++i) {
            if (!active(i)) continue;
            auto& w = p.tensors[i].data;
            auto& m = m_.tensors[i].data;
            auto& v = v_.tensors[i].data;
            const auto& d = g.tensors[i].data;
            for (std::size_t k = 0; k < w.size(); ++k) {
                m[k] = beta1 * m[k] + (1.0 - beta1) * d[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * d[k] * d[k];
                w[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon);
            }
        }
    }

    void step(Params& p, const Params& g) {
        step(p, g, [](std::size_t) { return true; });
    }

    int steps() const { return t_; }

private:
    Params m_, v_;
    int t_ = 0;
};

struct TrainConfig {
    int updates = 200;
    int episodes_per_update = 8;
    double learning_rate = 0.01;
    LossWeights loss{};
    /// Global gradient-norm clip; 0 disables.
    double grad_clip = 0.0;
    std::uint64_t seed = 1;
    int dim = 16;
    int rounds = 2;
    /// Episode collection threads.
    int workers = 1;
    /// Train only the value head; the sampling policy stays fixed.
    bool freeze_policy = false;
    /// Sample greedily instead of from the policy (value-head studies).
    bool greedy_rollouts = false;
    /// Set the value output bias to the first batch's mean reward before the
    /// first update (fresh parameters only).
    bool warm_start_value = true;
    /// Where a diagnostic trajectory is written when the loss goes non-finite.
    std::optional<std::filesystem::path> dump_dir;
};

struct CurveRow {
    int update = 0;
    double mean_reward = 0.0;
    double best_reward = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

struct TrainResult {
    Params params;
    std::vector<CurveRow> curve;
    /// Best sampled episode over the whole run.
    double best_reward = -std::numeric_limits<double>::infinity();
    std::vector<int> best_cells;
    int best_design = -1;
    long episodes = 0;
};

struct Episode {
    Trajectory trajectory;
    std::vector<Forward> forwards;
    int design = 0;
};

inline std::string curve_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os << "update,mean_reward,best_reward,policy_loss,value_loss,entropy\n";
    for (const auto& r : rows)
        os << r.update << ',' << format_double(r.mean_reward) << ',' << format_double(r.best_reward) << ',' << format_double(r.policy_loss) << ','
           << format_double(r.value_loss) << ',' << format_double(r.entropy) << '\n';
    return os.str();
}

inline double global_norm(const Params& g) {
    double s = 0.0;
    for (const auto& t : g.tensors)
        for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

/// Trainer state over a fixed set of designs; each design has its own
/// environment per worker and a shared outcome cache.
class Trainer {
public:
    Trainer(std::vector<std::shared_ptr<const EnvDesign>> designs, EnvConfig env_cfg, TrainConfig cfg, std::optional<Params> initial = std::nullopt)
        : env_cfg_(std::move(env_cfg)), cfg_(std::move(cfg)) {
        if (designs.empty()) throw ArgumentError("train: at least one design is required");
        if (cfg_.episodes_per_update < 1) throw ArgumentError("train: episodes_per_update must be at least 1");
        if (cfg_.updates < 0) throw ArgumentError("train: updates must be non-negative");
        const Arch arch{kFeatureCount, cfg_.dim, cfg_.rounds, env_cfg_.rows, env_cfg_.cols};
        params_ = initial ? *initial : Params::init(arch, mix_seed(cfg_.seed, 0x696e6974ULL));
        pending_warm_start_ = cfg_.warm_start_value && !initial;
        if (params_.arch != arch) throw ArgumentError("train: initial parameters do not match the architecture");
        for (auto& d : designs) {
            contexts_.push_back(std::make_unique<DesignContext>(make_context(d)));
            caches_.push_back(std::make_shared<OutcomeCache>());
        }
        const int workers = std::max(1, cfg_.workers);
        envs_.resize(static_cast<std::size_t>(workers));
        for (auto& per_worker : envs_)
            for (std::size_t i = 0; i < designs.size(); ++i) per_worker.push_back(std::make_unique<Environment>(designs[i], env_cfg_, caches_[i]));
        adam_ = std::make_unique<Adam>(params_, cfg_.learning_rate);
    }

    const Params& params() const { return params_; }
    std::size_t design_count() const { return contexts_.size(); }
    const DesignContext& context(std::size_t i) const { return *contexts_[i]; }
    Environment& environment(std::size_t i) { return *envs_[0][i]; }

    /// Runs one batch and one parameter update.
    CurveRow update(int u) {
        const int B = cfg_.episodes_per_update;
        std::vector<Episode> batch(static_cast<std::size_t>(B));
        collect(u, batch);
        if (pending_warm_start_) {
            double mean = 0.0;
            for (const auto& ep : batch) mean += ep.trajectory.reward / B;
            const double shift = mean - params_.head(Params::value_out_b).data[0];
            params_.head(Params::value_out_b).data[0] = mean;
            for (auto& ep : batch)
                for (auto& f : ep.forwards) f.value += shift;
            pending_warm_start_ = false;
        }

        Params grad = Params::zeros(params_.arch);
        CurveRow row;
        row.update = u;
        row.best_reward = -std::numeric_limits<double>::infinity();
        long steps = 0;
        for (const auto& ep : batch) {
            const double R = ep.trajectory.reward;
            row.mean_reward += R / B;
            if (R > row.best_reward) row.best_reward = R;
            if (R > result_.best_reward) {
                result_.best_reward = R;
                result_.best_cells = ep.trajectory.cells;
                result_.best_design = ep.design;
            }
            const DesignContext& ctx = *contexts_[static_cast<std::size_t>(ep.design)];
            for (std::size_t k = 0; k < ep.forwards.size(); ++k) {
                const Forward& f = ep.forwards[k];
                const double advantage = R - f.value;
                const auto l = step_loss(params_, ctx, f, ep.trajectory.steps[k].action, advantage, R, cfg_.loss, &grad, 1.0 / B);
                const double total = l.total(cfg_.loss);
                if (!std::isfinite(total)) fail(u, ep);
                row.policy_loss += l.policy / B;
                row.value_loss += l.value / B;
                row.entropy += l.entropy;
                ++steps;
            }
        }
        if (steps > 0) row.entropy /= static_cast<double>(steps);
        if (!grad.finite()) fail(u, batch.front());
        if (cfg_.grad_clip > 0.0) {
            const double n = global_norm(grad);
            if (n > cfg_.grad_clip)
                for (auto& t : grad.tensors)
                    for (double& v : t.data) v *= cfg_.grad_clip / n;
        }
        if (cfg_.freeze_policy)
            adam_->step(params_, grad, [&](std::size_t i) { return params_.is_value_tensor(i); });
        else
            adam_->step(params_, grad);
        result_.episodes += B;
        result_.curve.push_back(row);
        return row;
    }

    TrainResult run() {
        for (int u = 0; u < cfg_.updates; ++u) update(u);
        return result();
    }

    TrainResult result() const {
        TrainResult r = result_;
        r.params = params_;
        return r;
    }

    /// Greedy episode of the current policy on design `i`.
    Trajectory greedy(std::size_t i) {
        return rollout(*envs_[0][i], make_policy(params_, *contexts_[i]), 0, ActionSelection::greedy);
    }

private:
    void run_episode(int worker, int u, int b, Episode& ep) {
        const auto index = static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(cfg_.episodes_per_update) + static_cast<std::uint64_t>(b);
        ep.design = static_cast<int>(index % contexts_.size());
        const auto d = static_cast<std::size_t>(ep.design);
        ep.trajectory = rollout(*envs_[static_cast<std::size_t>(worker)][d], make_policy(params_, *contexts_[d], &ep.forwards), mix_seed(cfg_.seed, index + 1),
                                cfg_.greedy_rollouts ? ActionSelection::greedy : ActionSelection::sample);
    }

    void collect(int u, std::vector<Episode>& batch) {
        const int workers = static_cast<int>(envs_.size());
        const int B = static_cast<int>(batch.size());
        if (workers == 1) {
            for (int b = 0; b < B; ++b) run_episode(0, u, b, batch[static_cast<std::size_t>(b)]);
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int b = w; b < B; b += workers) run_episode(w, u, b, batch[static_cast<std::size_t>(b)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    [[noreturn]] void fail(int u, const Episode& ep) {
        const auto dump = to_json(ep.trajectory, *contexts_[static_cast<std::size_t>(ep.design)]->design).dump();
        std::string where = dump;
        if (cfg_.dump_dir) {
            const auto path = *cfg_.dump_dir / ("nonfinite_update" + std::to_string(u) + ".json");
            json_io::write_text_file(path, dump + "\n");
            where = path.string();
        }
        throw TrainingError("train: non-finite loss at update " + std::to_string(u) + "; trajectory: " + where);
    }

    EnvConfig env_cfg_;
    TrainConfig cfg_;
    Params params_;
    std::vector<std::unique_ptr<DesignContext>> contexts_;
    std::vector<std::shared_ptr<OutcomeCache>> caches_;
    std::vector<std::vector<std::unique_ptr<Environment>>> envs_;
    std::unique_ptr<Adam> adam_;
    TrainResult result_;
    bool pending_warm_start_ = false;
};

inline TrainResult train(std::vector<std::shared_ptr<const EnvDesign>> designs, const EnvConfig& env_cfg, const TrainConfig& cfg,
                         std::optional<Params> initial = std::nullopt) {
    Trainer t(std::move(designs), env_cfg, cfg, std::move(initial));
    return t.run();
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_json(const Params& p) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : p.tensors) tensors.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"data", t.data}});
    return {{"format", "macroplace-policy"},
            {"version", kCheckpointVersion},
            {"feature_layout", kFeatureLayoutVersion},
            {"arch", {{"features", p.arch.features}, {"dim", p.arch.dim}, {"rounds", p.arch.rounds}, {"rows", p.arch.rows}, {"cols", p.arch.cols}}},
            {"tensors", tensors}};
}

/// Strict: every tensor must match the shapes implied by the recorded architecture.
inline Params params_from_json(const nlohmann::json& j, const std::string& where = "<checkpoint>") {
    try {
        json_io::detail::reject_unknown(j, {"format", "version", "feature_layout", "arch", "tensors"}, where);
        if (j.at("format").get<std::string>() != "macroplace-policy") throw ParseError(where, 0, "not a policy checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw ParseError(where, 0, "unsupported checkpoint version");
        if (j.at("feature_layout").get<int>() != kFeatureLayoutVersion) throw ParseError(where, 0, "checkpoint uses another feature layout");
        const auto& a = j.at("arch");
        json_io::detail::reject_unknown(a, {"features", "dim", "rounds", "rows", "cols"}, where + ": arch");
        const Arch arch{a.at("features").get<int>(), a.at("dim").get<int>(), a.at("rounds").get<int>(), a.at("rows").get<int>(), a.at("cols").get<int>()};
        Params p = Params::zeros(arch);
        const auto& ts = j.at("tensors");
        if (ts.size() != p.tensors.size()) throw ParseError(where, 0, "expected " + std::to_string(p.tensors.size()) + " tensors");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            auto& t = p.tensors[i];
            json_io::detail::reject_unknown(ts[i], {"name", "shape", "data"}, where + ": tensor");
            if (ts[i].at("name").get<std::string>() != t.name) throw ParseError(where, 0, "tensor " + std::to_string(i) + " should be '" + t.name + "'");
            const auto shape = ts[i].at("shape").get<std::vector<int>>();
            if (shape != std::vector<int>{t.rows, t.cols}) throw ParseError(where, 0, "tensor '" + t.name + "' has the wrong shape");
            t.data = ts[i].at("data").get<std::vector<double>>();
            if (t.data.size() != static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols))
                throw ParseError(where, 0, "tensor '" + t.name + "' has the wrong number of values");
        }
        if (!p.finite()) throw ParseError(where, 0, "checkpoint has non-finite parameters");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where, 0, e.what());
    }
}

inline void save_checkpoint(const Params& p, const std::filesystem::path& path) { json_io::write_text_file(path, checkpoint_json(p).dump() + "\n"); }

inline Params load_checkpoint(const std::filesystem::path& path) { return params_from_json(json_io::read_json_file(path), path.string()); }

}  // namespace macroplace::agent
