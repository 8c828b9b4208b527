#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcl/envs.hpp"
#include "spcl/function_approx.hpp"
#include "spcl/rng.hpp"
#include "spcl/text.hpp"

namespace spcl {

enum class TrainMode { Sparse, Soft, UnifiedSparse };
enum class OptimizerKind { Sgd, Adam };

inline const char* to_string(TrainMode m) {
    switch (m) {
        case TrainMode::Sparse: return "sparse";
        case TrainMode::Soft: return "soft";
        case TrainMode::UnifiedSparse: return "unified_sparse";
    }
    return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
    if (s == "sparse") return TrainMode::Sparse;
    if (s == "soft") return TrainMode::Soft;
    if (s == "unified_sparse") return TrainMode::UnifiedSparse;
    throw std::invalid_argument("unknown train mode: " + s);
}

struct TrainerConfig {
    double alpha = 0.1;
    double gamma = 0.9;
    int rollout = 10;  // d
    double lr = 0.005;
    int buffer_capacity = 10000;
    double a_priority = 0.5;  // replay priority temperature (distinct from the regularizer)
    long iterations = 0;      // N
    long max_env_steps = 0;   // optional extra stop condition; 0 = none
    int batch_episodes = 8;
    int replay_batch = 8;
    TrainMode mode = TrainMode::Sparse;
    bool use_replay = true;
    int max_episode_len = 50;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("TrainerConfig: alpha must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TrainerConfig: gamma must lie in (0,1)");
        if (rollout < 1) throw std::invalid_argument("TrainerConfig: rollout must be >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("TrainerConfig: learning rate must be positive");
        if (buffer_capacity < 1 || batch_episodes < 1 || replay_batch < 1 || max_episode_len < 1)
            throw std::invalid_argument("TrainerConfig: sizes must be >= 1");
    }
};

/// One full episode: obs has length T+1 (including the final observation),
/// actions/rewards length T. terminal distinguishes true task termination
/// from a step-cap/horizon cut.
struct Episode {
    std::vector<int> obs;
    std::vector<int> actions;
    std::vector<double> rewards;
    bool terminal = false;

    int length() const { return static_cast<int>(actions.size()); }
    double total_reward() const {
        double acc = 0.0;
        for (double r : rewards) acc += r;
        return acc;
    }
};

/// Episode store with reward-prioritized sampling
///   P(i) = 0.1/n + 0.9 * exp(a_priority * R_i) / Z
/// and uniform-at-random eviction once capacity is exceeded.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity, double a_priority = 0.5)
        : capacity_(capacity), a_priority_(a_priority) {
        if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
    }

    void insert(Episode ep, Rng& rng) {
        episodes_.push_back(std::move(ep));
        while (static_cast<int>(episodes_.size()) > capacity_) {
            const int victim = uniform_int(rng, 0, static_cast<int>(episodes_.size()) - 1);
            if (victim + 1 != static_cast<int>(episodes_.size())) episodes_[victim] = std::move(episodes_.back());
            episodes_.pop_back();
        }
    }

    std::vector<double> sampling_probs() const {
        const std::size_t n = episodes_.size();
        double rmax = -std::numeric_limits<double>::infinity();
        for (const auto& e : episodes_) rmax = std::max(rmax, e.total_reward());
        double z = 0.0;
        std::vector<double> probs(n);
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = std::exp(a_priority_ * (episodes_[i].total_reward() - rmax));
            z += probs[i];
        }
        for (std::size_t i = 0; i < n; ++i) probs[i] = 0.1 / static_cast<double>(n) + 0.9 * probs[i] / z;
        return probs;
    }

    std::vector<const Episode*> sample(int k, Rng& rng) const {
        if (episodes_.empty()) throw std::runtime_error("ReplayBuffer::sample: buffer is empty");
        const std::vector<double> probs = sampling_probs();
        std::vector<const Episode*> out(k);
        for (int i = 0; i < k; ++i) out[i] = &episodes_[sample_categorical(rng, probs)];
        return out;
    }

    std::size_t size() const { return episodes_.size(); }
    bool empty() const { return episodes_.empty(); }
    const Episode& episode(std::size_t i) const { return episodes_[i]; }

private:
    int capacity_;
    double a_priority_;
    std::vector<Episode> episodes_;
};

using ModelInput = std::vector<double>;

/// A d-step window of an episode, carrying the encoded model inputs.
/// states has effective_len()+1 entries; the last one is the bootstrap input,
/// ignored when terminal_cut (the bootstrap value is then zero).
struct SubTrajectory {
    std::vector<ModelInput> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    int rollout = 1;
    bool terminal_cut = false;

    int effective_len() const { return static_cast<int>(actions.size()); }
};

/// All rollout-d windows of an episode. Episodes that ended in a true
/// terminal state yield a window at every t < T, the tail ones shortened
/// with a zero bootstrap; episodes cut by a horizon only yield full windows
/// (their final state has unknown value, so it must be bootstrapped by the
/// model, which needs t + d <= T).
inline std::vector<SubTrajectory> slice_windows(const Episode& ep, const WindowEncoder& enc, int d) {
    const int T = ep.length();
    std::vector<ModelInput> inputs(T + 1);
    for (int t = 0; t <= T; ++t) inputs[t] = enc.encode(ep.obs, ep.actions, t);
    std::vector<SubTrajectory> out;
    const int last_start = ep.terminal ? T - 1 : T - d;
    for (int t = 0; t <= last_start; ++t) {
        SubTrajectory w;
        w.rollout = d;
        const int e = std::min(d, T - t);
        w.terminal_cut = ep.terminal && (t + d >= T);
        w.states.assign(inputs.begin() + t, inputs.begin() + t + e + 1);
        w.actions.assign(ep.actions.begin() + t, ep.actions.begin() + t + e);
        w.rewards.assign(ep.rewards.begin() + t, ep.rewards.begin() + t + e);
        out.push_back(std::move(w));
    }
    return out;
}

/// Sparse consistency error of one window given model outputs at each of its
/// states:
///   J = -V(x_0) + gamma^d V(x_d)
///       + sum_t gamma^t (r_t + alpha/2 - alpha mu(a_t|x_t) + lambda(a_t|x_t) - Lambda(x_t)),
/// with V(x_d) = 0 and the sum truncated when the episode ended inside the
/// window.
inline double consistency_error(const SubTrajectory& xi, std::span<const ModelOutputs> outs, double alpha,
                                double gamma) {
    const int e = xi.effective_len();
    double j = -outs[0].v;
    if (!xi.terminal_cut) j += std::pow(gamma, xi.rollout) * outs[e].v;
    double disc = 1.0;
    for (int t = 0; t < e; ++t) {
        const int a = xi.actions[t];
        j += disc * (xi.rewards[t] + 0.5 * alpha - alpha * outs[t].mu.probs[a] + outs[t].lambda[a] - outs[t].Lambda);
        disc *= gamma;
    }
    return j;
}

/// Soft baseline error: J = -V(x_0) + gamma^d V(x_d) + sum gamma^t (r_t - alpha log mu(a_t|x_t)).
inline double soft_consistency_error(const SubTrajectory& xi, std::span<const ModelOutputs> outs, double alpha,
                                     double gamma) {
    const int e = xi.effective_len();
    double j = -outs[0].v;
    if (!xi.terminal_cut) j += std::pow(gamma, xi.rollout) * outs[e].v;
    double disc = 1.0;
    for (int t = 0; t < e; ++t) {
        const double p = outs[t].mu.probs[xi.actions[t]];
        if (!(p > 0.0)) throw std::domain_error("soft_consistency_error: mu(a|x) = 0 along the window");
        j += disc * (xi.rewards[t] - alpha * std::log(p));
        disc *= gamma;
    }
    return j;
}

struct LossGrads {
    double loss = 0.0;
    ParamVector grads;
    long n_windows = 0;
};

namespace detail {

/// loss = 1/2 sum_i J(xi_i)^2 over the batch; gradient = sum_i J * grad J,
/// assembled through Model::backward.
inline LossGrads batch_loss_and_grads(std::span<const SubTrajectory> batch, Model& model, double alpha,
                                      double gamma, bool soft) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
    LossGrads out;
    out.grads = model.params().zeros_like();
    for (std::size_t wi = 0; wi < batch.size(); ++wi) {
        const SubTrajectory& xi = batch[wi];
        const int e = xi.effective_len();
        std::vector<Model::Cache> caches;
        caches.reserve(e + 1);
        for (int t = 0; t <= e; ++t) {
            if (t == e && xi.terminal_cut) break;
            caches.push_back(model.forward(xi.states[t]));
        }
        std::vector<ModelOutputs> outs;
        outs.reserve(caches.size());
        for (const auto& c : caches) outs.push_back(c.out);
        const double j = soft ? soft_consistency_error(xi, outs, alpha, gamma)
                              : consistency_error(xi, outs, alpha, gamma);
        if (!std::isfinite(j))
            throw ModelDivergence("non-finite consistency error at window " + std::to_string(wi));
        out.loss += 0.5 * j * j;
        ++out.n_windows;
        if (j == 0.0) continue;
        double disc = 1.0;
        for (int t = 0; t < e; ++t) {
            OutputGrads up;
            const int a = xi.actions[t];
            if (soft) {
                up.dlogmu.assign(model.n_actions(), 0.0);
                up.dlogmu[a] = -alpha * disc * j;
            } else {
                up.dmu.assign(model.n_actions(), 0.0);
                up.dlambda.assign(model.n_actions(), 0.0);
                up.dmu[a] = -alpha * disc * j;
                up.dlambda[a] = disc * j;
                up.dLambda = -disc * j;
            }
            if (t == 0) up.dv = -j;
            model.backward(caches[t], up, out.grads);
            disc *= gamma;
        }
        if (!xi.terminal_cut) {
            OutputGrads up;
            up.dv = std::pow(gamma, xi.rollout) * j;
            model.backward(caches[e], up, out.grads);
        }
        for (double g : out.grads.data)
            if (!std::isfinite(g)) throw ModelDivergence("non-finite gradient at window " + std::to_string(wi));
    }
    return out;
}

}  // namespace detail

inline LossGrads loss_and_grads(std::span<const SubTrajectory> batch, Model& model, const TrainerConfig& cfg) {
    if (cfg.mode == TrainMode::Soft)
        throw std::invalid_argument("loss_and_grads: config is in soft mode; use soft_loss_and_grads");
    return detail::batch_loss_and_grads(batch, model, cfg.alpha, cfg.gamma, false);
}

inline LossGrads soft_loss_and_grads(std::span<const SubTrajectory> batch, Model& model,
                                     const TrainerConfig& cfg) {
    return detail::batch_loss_and_grads(batch, model, cfg.alpha, cfg.gamma, true);
}

struct IterationMetrics {
    long iter = 0;
    long env_steps = 0;
    double avg_reward = 0.0;
    double loss = 0.0;
    double support_size = 0.0;
    double max_prob = 0.0;
    std::uint64_t seed = 0;
};

struct TrainLog {
    std::vector<IterationMetrics> rows;
    bool diverged = false;
    std::string note;
    long total_env_steps = 0;
};

inline const char* metrics_csv_header() { return "iter,env_steps,avg_reward,loss,support_size,max_prob,seed"; }

inline std::string metrics_csv_row(const IterationMetrics& m) {
    std::string row = std::to_string(m.iter);
    row += ',';
    row += std::to_string(m.env_steps);
    row += ',';
    row += format_double(m.avg_reward);
    row += ',';
    row += format_double(m.loss);
    row += ',';
    row += format_double(m.support_size);
    row += ',';
    row += format_double(m.max_prob);
    row += ',';
    row += std::to_string(m.seed);
    return row;
}

/// Rolls one episode with the model policy (sampled, or greedy = most likely
/// action). Policy statistics of the visited states are accumulated into the
/// optional counters.
inline Episode rollout_episode(EpisodeEnv& env, Model& model, const WindowEncoder& enc, std::uint64_t env_seed,
                               int max_len, Rng& action_rng, bool greedy = false,
                               double* support_acc = nullptr, double* maxp_acc = nullptr, long* n_acc = nullptr) {
    Episode ep;
    ep.obs.push_back(env.reset(env_seed));
    for (int t = 0; t < max_len; ++t) {
        const ModelInput input = enc.encode(ep.obs, ep.actions, t);
        const Model::Cache c = model.forward(input);
        int action;
        if (greedy) {
            action = static_cast<int>(std::max_element(c.out.mu.probs.begin(), c.out.mu.probs.end()) -
                                      c.out.mu.probs.begin());
        } else {
            action = sample_categorical(action_rng, c.out.mu.probs);
        }
        if (support_acc) *support_acc += static_cast<double>(c.out.mu.support.size());
        if (maxp_acc) *maxp_acc += *std::max_element(c.out.mu.probs.begin(), c.out.mu.probs.end());
        if (n_acc) ++*n_acc;
        const StepResult res = env.step(action);
        ep.actions.push_back(action);
        ep.rewards.push_back(res.reward);
        ep.obs.push_back(res.obs);
        if (res.done) {
            ep.terminal = !res.truncated;
            return ep;
        }
    }
    ep.terminal = false;  // trainer-side length cap
    return ep;
}

/// One training run: per iteration, sample a batch of on-policy episodes,
/// take a gradient step on all their rollout-d windows, insert them into the
/// replay buffer with priority = total episode reward, then take a second
/// step on a replayed batch. Metrics are appended per iteration and streamed
/// as CSV when an output stream is given.
inline TrainLog train(EpisodeEnv& env, Model& model, const WindowEncoder& enc, const TrainerConfig& cfg,
                      std::ostream* csv = nullptr) {
    cfg.validate();
    TrainLog log;
    if (csv) *csv << metrics_csv_header() << '\n';
    Rng rng(cfg.seed);
    ReplayBuffer buffer(cfg.buffer_capacity, cfg.a_priority);
    const bool soft = cfg.mode == TrainMode::Soft;

    std::vector<double> adam_m, adam_v;
    long adam_t = 0;
    auto apply_step = [&](const ParamVector& grads) {
        std::vector<double>& p = model.params().data;
        if (cfg.optimizer == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.lr * grads.data[i];
            return;
        }
        if (adam_m.empty()) {
            adam_m.assign(p.size(), 0.0);
            adam_v.assign(p.size(), 0.0);
        }
        ++adam_t;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, adam_t), c2 = 1.0 - std::pow(b2, adam_t);
        for (std::size_t i = 0; i < p.size(); ++i) {
            adam_m[i] = b1 * adam_m[i] + (1.0 - b1) * grads.data[i];
            adam_v[i] = b2 * adam_v[i] + (1.0 - b2) * grads.data[i] * grads.data[i];
            p[i] -= cfg.lr * (adam_m[i] / c1) / (std::sqrt(adam_v[i] / c2) + eps);
        }
    };

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        if (cfg.max_env_steps > 0 && log.total_env_steps >= cfg.max_env_steps) break;
        try {
            double support_acc = 0.0, maxp_acc = 0.0, reward_acc = 0.0;
            long n_visited = 0;
            std::vector<Episode> episodes;
            std::vector<SubTrajectory> windows;
            for (int b = 0; b < cfg.batch_episodes; ++b) {
                Episode ep = rollout_episode(env, model, enc, rng(), cfg.max_episode_len, rng, false,
                                             &support_acc, &maxp_acc, &n_visited);
                log.total_env_steps += ep.length();
                reward_acc += ep.total_reward();
                for (auto& w : slice_windows(ep, enc, cfg.rollout)) windows.push_back(std::move(w));
                episodes.push_back(std::move(ep));
            }
            double loss = 0.0;
            if (!windows.empty()) {
                const LossGrads lg = detail::batch_loss_and_grads(windows, model, cfg.alpha, cfg.gamma, soft);
                loss = lg.loss;
                apply_step(lg.grads);
            }
            for (auto& ep : episodes) buffer.insert(std::move(ep), rng);
            if (cfg.use_replay && !buffer.empty()) {
                std::vector<SubTrajectory> replay_windows;
                for (const Episode* ep : buffer.sample(cfg.replay_batch, rng))
                    for (auto& w : slice_windows(*ep, enc, cfg.rollout)) replay_windows.push_back(std::move(w));
                if (!replay_windows.empty()) {
                    const LossGrads lg =
                        detail::batch_loss_and_grads(replay_windows, model, cfg.alpha, cfg.gamma, soft);
                    apply_step(lg.grads);
                }
            }
            IterationMetrics m;
            m.iter = iter;
            m.env_steps = log.total_env_steps;
            m.avg_reward = reward_acc / cfg.batch_episodes;
            m.loss = loss;
            m.support_size = n_visited > 0 ? support_acc / n_visited : 0.0;
            m.max_prob = n_visited > 0 ? maxp_acc / n_visited : 0.0;
            m.seed = cfg.seed;
            log.rows.push_back(m);
            if (csv) *csv << metrics_csv_row(m) << '\n';
        } catch (const ModelDivergence& e) {
            log.diverged = true;
            log.note = e.what();
            break;
        } catch (const std::domain_error& e) {
            // e.g. softmax underflow driving log mu(a|x) out of domain
            log.diverged = true;
            log.note = e.what();
            break;
        }
    }
    return log;
}

}  // namespace spcl
