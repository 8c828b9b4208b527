#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spcl/core_math.hpp"
#include "spcl/rng.hpp"

namespace spcl {

/// Finite MDP with dense transition kernel and reward table. Immutable after
/// construction by convention; solvers never modify it.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.9;
    std::vector<double> reward;        // [x * n_actions + a]
    std::vector<double> transition;    // [(x * n_actions + a) * n_states + y]
    std::vector<std::uint8_t> terminal;  // per state; terminals self-loop with reward 0

    double r(int x, int a) const { return reward[static_cast<std::size_t>(x) * n_actions + a]; }
    double& r(int x, int a) { return reward[static_cast<std::size_t>(x) * n_actions + a]; }
    double p(int x, int a, int y) const {
        return transition[(static_cast<std::size_t>(x) * n_actions + a) * n_states + y];
    }
    double& p(int x, int a, int y) {
        return transition[(static_cast<std::size_t>(x) * n_actions + a) * n_states + y];
    }
    bool is_terminal(int x) const { return terminal[x] != 0; }

    static TabularMDP zeros(int n_states, int n_actions, double gamma) {
        TabularMDP m;
        m.n_states = n_states;
        m.n_actions = n_actions;
        m.gamma = gamma;
        m.reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
        m.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
        m.terminal.assign(n_states, 0);
        return m;
    }

    /// Marks a state terminal and rewires it to the required zero-reward self-loop.
    void make_terminal(int x) {
        terminal[x] = 1;
        for (int a = 0; a < n_actions; ++a) {
            r(x, a) = 0.0;
            for (int y = 0; y < n_states; ++y) p(x, a, y) = (y == x) ? 1.0 : 0.0;
        }
    }

    void validate() const {
        if (n_states < 1 || n_actions < 1) throw std::invalid_argument("TabularMDP: empty state or action set");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TabularMDP: gamma must lie in (0,1)");
        if (reward.size() != static_cast<std::size_t>(n_states) * n_actions ||
            transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states ||
            terminal.size() != static_cast<std::size_t>(n_states))
            throw std::invalid_argument("TabularMDP: table shapes disagree");
        for (int x = 0; x < n_states; ++x)
            for (int a = 0; a < n_actions; ++a) {
                double row = 0.0;
                for (int y = 0; y < n_states; ++y) {
                    const double pv = p(x, a, y);
                    if (pv < 0.0 || !std::isfinite(pv)) throw std::invalid_argument("TabularMDP: invalid probability");
                    row += pv;
                }
                if (std::abs(row - 1.0) > 1e-12) throw std::invalid_argument("TabularMDP: transition row does not sum to 1");
                if (is_terminal(x) && (r(x, a) != 0.0 || p(x, a, x) != 1.0))
                    throw std::invalid_argument("TabularMDP: terminal state must self-loop with reward 0");
            }
    }
};

using ValueFunction = std::vector<double>;

struct TabularPolicy {
    std::vector<PolicyDistribution> dist;  // one per state

    int n_states() const { return static_cast<int>(dist.size()); }
    void validate() const {
        for (const auto& d : dist) d.validate();
    }
};

enum class BackupKind { Max, Soft, Sparse };
enum class Objective { Plain, Soft, Sparse };

inline const char* to_string(BackupKind k) {
    switch (k) {
        case BackupKind::Max: return "max";
        case BackupKind::Soft: return "soft";
        case BackupKind::Sparse: return "sparse";
    }
    return "?";
}

inline BackupKind backup_kind_from_string(const std::string& s) {
    if (s == "max") return BackupKind::Max;
    if (s == "soft") return BackupKind::Soft;
    if (s == "sparse") return BackupKind::Sparse;
    throw std::invalid_argument("unknown backup kind: " + s);
}

/// Q(x,a) = r(x,a) + gamma * sum_y P(y|x,a) v(y) for one state.
inline ActionScores q_row(const TabularMDP& m, const ValueFunction& v, int x) {
    ActionScores q(m.n_actions);
    for (int a = 0; a < m.n_actions; ++a) {
        double acc = 0.0;
        for (int y = 0; y < m.n_states; ++y) acc += m.p(x, a, y) * v[y];
        q[a] = m.r(x, a) + m.gamma * acc;
    }
    return q;
}

inline std::vector<ActionScores> q_from_v(const TabularMDP& m, const ValueFunction& v) {
    if (static_cast<int>(v.size()) != m.n_states) throw std::invalid_argument("q_from_v: shape mismatch");
    std::vector<ActionScores> q(m.n_states);
    for (int x = 0; x < m.n_states; ++x) q[x] = q_row(m, v, x);
    return q;
}

/// One sweep of the Bellman optimality operator for the chosen regularizer.
/// Terminal states map to 0.
inline ValueFunction backup(const TabularMDP& m, const ValueFunction& v, BackupKind kind, double alpha) {
    if (kind != BackupKind::Max && !(alpha > 0.0))
        throw std::domain_error("backup: alpha must be positive for soft/sparse");
    ValueFunction out(m.n_states, 0.0);
    for (int x = 0; x < m.n_states; ++x) {
        if (m.is_terminal(x)) continue;
        ActionScores q = q_row(m, v, x);
        switch (kind) {
            case BackupKind::Max:
                out[x] = *std::max_element(q.begin(), q.end());
                break;
            case BackupKind::Soft: {
                for (double& qa : q) qa /= alpha;
                out[x] = alpha * sfmax(q);
                break;
            }
            case BackupKind::Sparse: {
                for (double& qa : q) qa /= alpha;
                out[x] = alpha * spmax(q);
                break;
            }
        }
    }
    return out;
}

struct NonConvergence : std::runtime_error {
    double residual;
    explicit NonConvergence(double res)
        : std::runtime_error("value iteration did not converge; residual " + std::to_string(res)), residual(res) {}
};

struct ValueIterationResult {
    ValueFunction v;
    long iterations = 0;
    double residual = 0.0;
};

inline ValueIterationResult value_iteration(const TabularMDP& m, BackupKind kind, double alpha,
                                            double tol = 1e-10, long max_iters = 1000000,
                                            ValueFunction v0 = {}) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    ValueFunction v = v0.empty() ? ValueFunction(m.n_states, 0.0) : std::move(v0);
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 1; it <= max_iters; ++it) {
        ValueFunction next = backup(m, v, kind, alpha);
        residual = 0.0;
        for (int x = 0; x < m.n_states; ++x) residual = std::max(residual, std::abs(next[x] - v[x]));
        v = std::move(next);
        if (residual <= tol) return {std::move(v), it, residual};
    }
    throw NonConvergence(residual);
}

/// Greedy/softmax/sparsemax policy of the Q-values induced by v. For Max the
/// tie-break is the lowest action index.
inline TabularPolicy extract_policy(const TabularMDP& m, const ValueFunction& v, BackupKind kind, double alpha) {
    TabularPolicy pi;
    pi.dist.resize(m.n_states);
    for (int x = 0; x < m.n_states; ++x) {
        const ActionScores q = q_row(m, v, x);
        switch (kind) {
            case BackupKind::Max: {
                const int best = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
                pi.dist[x].probs.assign(m.n_actions, 0.0);
                pi.dist[x].probs[best] = 1.0;
                pi.dist[x].support = {best};
                break;
            }
            case BackupKind::Soft:
                pi.dist[x] = softmax_policy(q, alpha);
                break;
            case BackupKind::Sparse:
                pi.dist[x] = sparsemax_policy(q, alpha);
                break;
        }
    }
    return pi;
}

namespace detail {

/// Dense Gaussian elimination with partial pivoting; A is row-major n x n.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(A[static_cast<std::size_t>(row) * n + col]) >
                std::abs(A[static_cast<std::size_t>(piv) * n + col]))
                piv = row;
        if (A[static_cast<std::size_t>(piv) * n + col] == 0.0)
            throw std::runtime_error("solve_dense: singular system");
        if (piv != col) {
            for (int k = col; k < n; ++k)
                std::swap(A[static_cast<std::size_t>(piv) * n + k], A[static_cast<std::size_t>(col) * n + k]);
            std::swap(b[piv], b[col]);
        }
        const double d = A[static_cast<std::size_t>(col) * n + col];
        for (int row = col + 1; row < n; ++row) {
            const double f = A[static_cast<std::size_t>(row) * n + col] / d;
            if (f == 0.0) continue;
            for (int k = col; k < n; ++k)
                A[static_cast<std::size_t>(row) * n + k] -= f * A[static_cast<std::size_t>(col) * n + k];
            b[row] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int row = n - 1; row >= 0; --row) {
        double acc = b[row];
        for (int k = row + 1; k < n; ++k) acc -= A[static_cast<std::size_t>(row) * n + k] * x[k];
        x[row] = acc / A[static_cast<std::size_t>(row) * n + row];
    }
    return x;
}

}  // namespace detail

/// Value of a fixed policy under the chosen objective. The per-step bonus is
/// 0 (plain), -alpha log mu (soft) or alpha/2 (1 - mu) (sparse); terminal
/// states earn no bonus so their value stays 0. Direct linear solve up to
/// 2000 states, fixed-point iteration beyond.
inline ValueFunction policy_evaluation(const TabularMDP& m, const TabularPolicy& mu, Objective objective,
                                       double alpha = 0.0) {
    if (mu.n_states() != m.n_states) throw std::invalid_argument("policy_evaluation: shape mismatch");
    const int n = m.n_states;
    std::vector<double> r_mu(n, 0.0);
    std::vector<double> p_mu(static_cast<std::size_t>(n) * n, 0.0);
    for (int x = 0; x < n; ++x) {
        const PolicyDistribution& d = mu.dist[x];
        for (int a : d.support) {
            const double w = d.probs[a];
            double bonus = 0.0;
            if (!m.is_terminal(x)) {
                if (objective == Objective::Soft) bonus = -alpha * std::log(w);
                else if (objective == Objective::Sparse) bonus = 0.5 * alpha * (1.0 - w);
            }
            r_mu[x] += w * (m.r(x, a) + bonus);
            for (int y = 0; y < n; ++y) p_mu[static_cast<std::size_t>(x) * n + y] += w * m.p(x, a, y);
        }
    }
    if (n <= 2000) {
        std::vector<double> A(static_cast<std::size_t>(n) * n, 0.0);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                A[static_cast<std::size_t>(x) * n + y] =
                    (x == y ? 1.0 : 0.0) - m.gamma * p_mu[static_cast<std::size_t>(x) * n + y];
        return detail::solve_dense(std::move(A), r_mu);
    }
    ValueFunction v(n, 0.0);
    for (long it = 0; it < 10000000; ++it) {
        double residual = 0.0;
        ValueFunction next(n);
        for (int x = 0; x < n; ++x) {
            double acc = r_mu[x];
            for (int y = 0; y < n; ++y) acc += m.gamma * p_mu[static_cast<std::size_t>(x) * n + y] * v[y];
            next[x] = acc;
            residual = std::max(residual, std::abs(next[x] - v[x]));
        }
        v = std::move(next);
        if (residual <= 1e-12) return v;
    }
    throw NonConvergence(0.0);
}

/// Sandwich-bound report for the soft and sparse optimal policies measured in
/// the plain MDP:
///   V*(x) - alpha log|A| / (1-gamma)            <= V^{mu_sf}(x) <= V*(x)
///   V*(x) - alpha (|A|-1)/(2|A|) / (1-gamma)    <= V^{mu_sp}(x) <= V*(x)
struct BoundReport {
    double alpha = 0.0;
    double soft_bound = 0.0;       // alpha log|A| / (1-gamma)
    double sparse_bound = 0.0;     // alpha (|A|-1)/(2|A|) / (1-gamma)
    double max_soft_gap = 0.0;     // max_x V*(x) - V^{mu_sf}(x)
    double max_sparse_gap = 0.0;   // max_x V*(x) - V^{mu_sp}(x)
    double max_upper_violation = 0.0;  // max_x max(V^{mu}(x) - V*(x), 0) over both policies
    bool ok = false;
    ValueFunction v_star, v_soft_policy, v_sparse_policy;
};

inline BoundReport check_bounds(const TabularMDP& m, double alpha, double tol = 1e-10) {
    BoundReport rep;
    rep.alpha = alpha;
    const double horizon = 1.0 / (1.0 - m.gamma);
    const int A = m.n_actions;
    rep.soft_bound = alpha * std::log(static_cast<double>(A)) * horizon;
    rep.sparse_bound = alpha * (A - 1.0) / (2.0 * A) * horizon;

    rep.v_star = value_iteration(m, BackupKind::Max, alpha, tol).v;
    const ValueFunction v_sf = value_iteration(m, BackupKind::Soft, alpha, tol).v;
    const ValueFunction v_sp = value_iteration(m, BackupKind::Sparse, alpha, tol).v;
    const TabularPolicy mu_sf = extract_policy(m, v_sf, BackupKind::Soft, alpha);
    const TabularPolicy mu_sp = extract_policy(m, v_sp, BackupKind::Sparse, alpha);
    rep.v_soft_policy = policy_evaluation(m, mu_sf, Objective::Plain);
    rep.v_sparse_policy = policy_evaluation(m, mu_sp, Objective::Plain);

    for (int x = 0; x < m.n_states; ++x) {
        rep.max_soft_gap = std::max(rep.max_soft_gap, rep.v_star[x] - rep.v_soft_policy[x]);
        rep.max_sparse_gap = std::max(rep.max_sparse_gap, rep.v_star[x] - rep.v_sparse_policy[x]);
        rep.max_upper_violation = std::max({rep.max_upper_violation,
                                            rep.v_soft_policy[x] - rep.v_star[x],
                                            rep.v_sparse_policy[x] - rep.v_star[x]});
    }
    // value iteration stops at residual <= tol, leaving up to tol/(1-gamma)
    // error in the reference values
    const double slack = 1e-8 + tol * horizon;
    rep.ok = rep.max_soft_gap <= rep.soft_bound + slack && rep.max_sparse_gap <= rep.sparse_bound + slack &&
             rep.max_upper_violation <= slack;
    return rep;
}

/// Seeded random MDP: Dirichlet(1) transition rows, rewards uniform in [0,1].
inline TabularMDP random_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
    TabularMDP m = TabularMDP::zeros(n_states, n_actions, gamma);
    for (int x = 0; x < n_states; ++x)
        for (int a = 0; a < n_actions; ++a) {
            const std::vector<double> row = dirichlet_uniform(rng, n_states);
            for (int y = 0; y < n_states; ++y) m.p(x, a, y) = row[y];
            m.r(x, a) = uniform01(rng);
        }
    return m;
}

/// Random MDP with deterministic transitions (uniform random successor per
/// state-action pair). On such MDPs the consistency relation holds along
/// every sampled trajectory, not just in expectation.
inline TabularMDP random_deterministic_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
    TabularMDP m = TabularMDP::zeros(n_states, n_actions, gamma);
    for (int x = 0; x < n_states; ++x)
        for (int a = 0; a < n_actions; ++a) {
            m.p(x, a, uniform_int(rng, 0, n_states - 1)) = 1.0;
            m.r(x, a) = uniform01(rng);
        }
    return m;
}

// --- serialization -----------------------------------------------------
// Flat JSON schema: {"n_states", "n_actions", "gamma", "rewards" (row-major
// x*A+a), "transitions" (row-major (x*A+a)*S+y), "terminal" (0/1 mask)}.
// nlohmann emits shortest round-trip decimals, so save/load is bit-exact.

inline nlohmann::json mdp_to_json(const TabularMDP& m) {
    nlohmann::json j;
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    j["gamma"] = m.gamma;
    j["rewards"] = m.reward;
    j["transitions"] = m.transition;
    j["terminal"] = m.terminal;
    return j;
}

inline TabularMDP mdp_from_json(const nlohmann::json& j) {
    TabularMDP m;
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.gamma = j.at("gamma").get<double>();
    m.reward = j.at("rewards").get<std::vector<double>>();
    m.transition = j.at("transitions").get<std::vector<double>>();
    m.terminal = j.at("terminal").get<std::vector<std::uint8_t>>();
    m.validate();
    return m;
}

inline void save_mdp(const TabularMDP& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mdp: cannot open " + path);
    out << mdp_to_json(m).dump(2) << '\n';
}

inline TabularMDP load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mdp: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return mdp_from_json(j);
}

}  // namespace spcl
