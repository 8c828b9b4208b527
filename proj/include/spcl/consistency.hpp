#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "spcl/core_math.hpp"
#include "spcl/mdp.hpp"
#include "spcl/rng.hpp"

namespace spcl {

/// Candidate (V, mu, lambda, Lambda) tuple for the sparse consistency
/// equation. lambda is indexed [x * n_actions + a], Lambda per state.
struct ConsistencyWitness {
    ValueFunction v;
    TabularPolicy mu;
    std::vector<double> lambda;
    std::vector<double> Lambda;

    double lam(int x, int a, int n_actions) const { return lambda[static_cast<std::size_t>(x) * n_actions + a]; }
};

/// Multiplier constraints: lambda >= 0, complementary slackness
/// lambda*mu = 0, and -alpha/2 <= Lambda <= 0. Returns the worst violation.
inline double witness_constraint_violation(const TabularMDP& m, const ConsistencyWitness& w, double alpha) {
    double worst = 0.0;
    for (int x = 0; x < m.n_states; ++x) {
        worst = std::max(worst, w.Lambda[x] - 0.0);
        worst = std::max(worst, -0.5 * alpha - w.Lambda[x]);
        for (int a = 0; a < m.n_actions; ++a) {
            const double l = w.lam(x, a, m.n_actions);
            worst = std::max(worst, -l);
            worst = std::max(worst, std::abs(l * w.mu.dist[x].probs[a]));
        }
    }
    return worst;
}

namespace detail {
/// Per-step payoff term of the sparse consistency relation. Terminal states
/// follow the episodic convention: the regularizer and multipliers are
/// skipped, leaving the bare (zero) reward.
inline double sparse_step_term(const TabularMDP& m, const ConsistencyWitness& w, int x, int a, double alpha) {
    if (m.is_terminal(x)) return m.r(x, a);
    return m.r(x, a) + 0.5 * alpha - alpha * w.mu.dist[x].probs[a] + w.lam(x, a, m.n_actions) - w.Lambda[x];
}
}  // namespace detail

/// Residual of the one-step sparse consistency equation at (x,a):
///   r + alpha/2 - alpha mu + lambda - Lambda + gamma E[v(x')] - v(x).
/// Zero at every pair iff the witness satisfies the equation.
inline double one_step_residual(const TabularMDP& m, const ConsistencyWitness& w, int x, int a, double alpha) {
    double ev = 0.0;
    for (int y = 0; y < m.n_states; ++y) ev += m.p(x, a, y) * w.v[y];
    return detail::sparse_step_term(m, w, x, a, alpha) + m.gamma * ev - w.v[x];
}

inline double max_abs_residual(const TabularMDP& m, const ConsistencyWitness& w, double alpha) {
    double worst = 0.0;
    for (int x = 0; x < m.n_states; ++x)
        for (int a = 0; a < m.n_actions; ++a)
            worst = std::max(worst, std::abs(one_step_residual(m, w, x, a, alpha)));
    return worst;
}

/// Builds the exact multipliers for a sparse-optimal (v*, mu*) pair:
/// Lambda(x) = Q(x,a) + alpha/2 - alpha mu(a|x) - v(x) for supported a (all
/// supported actions must agree), lambda zero on the support and the slack
/// Lambda(x) - (Q + alpha/2 - v) off it.
inline ConsistencyWitness construct_witness(const TabularMDP& m, const ValueFunction& v_star,
                                            const TabularPolicy& mu_star, double alpha) {
    ConsistencyWitness w;
    w.v = v_star;
    w.mu = mu_star;
    w.lambda.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    w.Lambda.assign(m.n_states, 0.0);
    for (int x = 0; x < m.n_states; ++x) {
        if (m.is_terminal(x)) continue;  // convention: Lambda = 0, lambda = 0
        const ActionScores q = q_row(m, v_star, x);
        const PolicyDistribution& d = mu_star.dist[x];
        if (d.support.empty()) throw std::invalid_argument("construct_witness: empty policy support");
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        double mean = 0.0;
        for (int a : d.support) {
            const double cand = q[a] + 0.5 * alpha - alpha * d.probs[a] - v_star[x];
            lo = std::min(lo, cand);
            hi = std::max(hi, cand);
            mean += cand;
        }
        if (hi - lo > 1e-6)
            throw std::invalid_argument("construct_witness: supported actions disagree; input pair is not optimal");
        w.Lambda[x] = mean / static_cast<double>(d.support.size());
        for (int a = 0; a < m.n_actions; ++a) {
            if (d.probs[a] > 0.0) continue;
            w.lambda[static_cast<std::size_t>(x) * m.n_actions + a] =
                w.Lambda[x] - (q[a] + 0.5 * alpha - v_star[x]);
        }
    }
    return w;
}

/// Exact expectation of the d-step consistency residual for a prescribed
/// action sequence: full tabular forward pass through P, no sampling.
inline double multi_step_residual_exact(const TabularMDP& m, const ConsistencyWitness& w, int x0,
                                        std::span<const int> actions, double alpha) {
    const int d = static_cast<int>(actions.size());
    if (d < 1) throw std::invalid_argument("multi_step_residual_exact: need at least one step");
    std::vector<double> dist(m.n_states, 0.0);
    dist[x0] = 1.0;
    double acc = 0.0;
    double disc = 1.0;
    for (int t = 0; t < d; ++t) {
        const int a = actions[t];
        std::vector<double> next(m.n_states, 0.0);
        for (int x = 0; x < m.n_states; ++x) {
            if (dist[x] == 0.0) continue;
            acc += disc * dist[x] * detail::sparse_step_term(m, w, x, a, alpha);
            for (int y = 0; y < m.n_states; ++y) next[y] += dist[x] * m.p(x, a, y);
        }
        dist = std::move(next);
        disc *= m.gamma;
    }
    for (int x = 0; x < m.n_states; ++x) acc += disc * dist[x] * w.v[x];
    return acc - w.v[x0];
}

/// Gap report for the near-optimality theorems. `tau` is the witness's
/// measured one-step residual; its effect on the bound is propagated with the
/// geometric factor 1/(1-gamma).
struct GapReport {
    double worst_gap = 0.0;   // max_x (optimal value - policy value)
    double bound = 0.0;       // theorem constant
    double tau = 0.0;         // measured max |one-step residual|
    double slack = 0.0;       // tau / (1-gamma) + numerical allowance
    double upper_violation = 0.0;  // max_x (policy value - optimal value)
    bool ok = false;
};

/// Sparse-MDP near-optimality: V^mu_sp >= V*_sp - alpha/(1-gamma).
inline GapReport check_sparse_gap(const TabularMDP& m, const ConsistencyWitness& w, double alpha) {
    GapReport rep;
    rep.tau = max_abs_residual(m, w, alpha);
    const double horizon = 1.0 / (1.0 - m.gamma);
    rep.bound = alpha * horizon;
    rep.slack = rep.tau * horizon + 1e-8;
    const ValueFunction v_star = value_iteration(m, BackupKind::Sparse, alpha).v;
    const ValueFunction v_mu = policy_evaluation(m, w.mu, Objective::Sparse, alpha);
    for (int x = 0; x < m.n_states; ++x) {
        rep.worst_gap = std::max(rep.worst_gap, v_star[x] - v_mu[x]);
        rep.upper_violation = std::max(rep.upper_violation, v_mu[x] - v_star[x]);
    }
    rep.ok = rep.worst_gap <= rep.bound + rep.slack && rep.upper_violation <= rep.slack;
    return rep;
}

/// Original-MDP near-optimality: V^mu >= V* - (3/2 - 1/|A|) alpha/(1-gamma).
inline GapReport check_original_gap(const TabularMDP& m, const ConsistencyWitness& w, double alpha) {
    GapReport rep;
    rep.tau = max_abs_residual(m, w, alpha);
    const double horizon = 1.0 / (1.0 - m.gamma);
    rep.bound = (1.5 - 1.0 / m.n_actions) * alpha * horizon;
    rep.slack = rep.tau * horizon + 1e-8;
    const ValueFunction v_star = value_iteration(m, BackupKind::Max, alpha).v;
    const ValueFunction v_mu = policy_evaluation(m, w.mu, Objective::Plain);
    for (int x = 0; x < m.n_states; ++x) {
        rep.worst_gap = std::max(rep.worst_gap, v_star[x] - v_mu[x]);
        rep.upper_violation = std::max(rep.upper_violation, v_mu[x] - v_star[x]);
    }
    rep.ok = rep.worst_gap <= rep.bound + rep.slack && rep.upper_violation <= rep.slack;
    return rep;
}

/// Baseline: single-step soft consistency residual
/// r - alpha log mu + gamma E[v(x')] - v(x). Requires mu(a|x) > 0.
inline double soft_consistency_residual(const TabularMDP& m, const ValueFunction& v, const TabularPolicy& mu,
                                        int x, int a, double alpha) {
    const double p = mu.dist[x].probs[a];
    if (!(p > 0.0)) throw std::domain_error("soft_consistency_residual: mu(a|x) = 0");
    double ev = 0.0;
    for (int y = 0; y < m.n_states; ++y) ev += m.p(x, a, y) * v[y];
    return m.r(x, a) - alpha * std::log(p) + m.gamma * ev - v[x];
}

// --- witness search ------------------------------------------------------
// Finds (approximately) consistent witnesses from random starts by gradient
// descent on the summed squared one-step residual. The multiplier
// constraints hold structurally: mu = (f - G(f))^+, lambda = (G(f)-f)^+ e^aux
// (so lambda*mu = 0 exactly) and Lambda = -alpha/2 * sigmoid(u).

struct WitnessSearchResult {
    ConsistencyWitness w;
    double tau = 0.0;  // achieved max |one-step residual|
};

namespace detail {

struct WitnessParams {
    std::vector<double> v;    // per state
    std::vector<double> f;    // per (state, action)
    std::vector<double> aux;  // per (state, action)
    std::vector<double> u;    // per state
};

inline ConsistencyWitness realize_witness(const TabularMDP& m, const WitnessParams& p, double alpha) {
    ConsistencyWitness w;
    w.v = p.v;
    w.mu.dist.resize(m.n_states);
    w.lambda.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    w.Lambda.resize(m.n_states);
    for (int x = 0; x < m.n_states; ++x) {
        ActionScores fx(p.f.begin() + static_cast<std::size_t>(x) * m.n_actions,
                        p.f.begin() + static_cast<std::size_t>(x + 1) * m.n_actions);
        w.mu.dist[x] = sparsemax_from_scores(fx);
        const double g = g_threshold(fx, support_set(fx));
        for (int a = 0; a < m.n_actions; ++a) {
            const double slack = std::max(g - fx[a], 0.0);
            w.lambda[static_cast<std::size_t>(x) * m.n_actions + a] =
                slack * std::exp(p.aux[static_cast<std::size_t>(x) * m.n_actions + a]);
        }
        w.Lambda[x] = -0.5 * alpha / (1.0 + std::exp(-p.u[x]));
    }
    return w;
}

}  // namespace detail

inline WitnessSearchResult search_consistent_witness(const TabularMDP& m, double alpha, Rng& rng,
                                                     int iterations = 6000, double lr = 0.05) {
    const int n = m.n_states, A = m.n_actions;
    detail::WitnessParams p;
    const double vmax = 1.0 / (1.0 - m.gamma);
    p.v.resize(n);
    p.u.assign(n, 0.0);
    p.f.resize(static_cast<std::size_t>(n) * A);
    p.aux.assign(static_cast<std::size_t>(n) * A, 0.0);
    for (int x = 0; x < n; ++x) p.v[x] = uniform_in(rng, 0.0, vmax);
    for (auto& fv : p.f) fv = uniform_in(rng, -0.5, 0.5);

    // flat parameter order: v | f | aux | u
    const std::size_t nv = p.v.size(), nf = p.f.size(), na = p.aux.size(), nu = p.u.size();
    std::vector<double> m1(nv + nf + na + nu, 0.0), m2(nv + nf + na + nu, 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    std::vector<double> grad(nv + nf + na + nu);
    for (int it = 1; it <= iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const ConsistencyWitness w = detail::realize_witness(m, p, alpha);
        for (int x = 0; x < n; ++x) {
            ActionScores fx(p.f.begin() + static_cast<std::size_t>(x) * A,
                            p.f.begin() + static_cast<std::size_t>(x + 1) * A);
            const std::vector<int> s = support_set(fx);
            const double g = g_threshold(fx, s);
            const double sig = 1.0 / (1.0 + std::exp(-p.u[x]));
            std::vector<char> in_s(A, 0);
            for (int a : s) in_s[a] = 1;
            for (int a = 0; a < A; ++a) {
                const double res = one_step_residual(m, w, x, a, alpha);
                if (res == 0.0) continue;
                // v gradient: gamma P(y|x,a) - delta_{xy}
                for (int y = 0; y < n; ++y) grad[y] += res * m.gamma * m.p(x, a, y);
                grad[x] -= res;
                if (m.is_terminal(x)) continue;
                // f gradient through mu (supported a) or lambda (unsupported a)
                if (in_s[a]) {
                    const double inv = 1.0 / static_cast<double>(s.size());
                    for (int b : s)
                        grad[nv + static_cast<std::size_t>(x) * A + b] +=
                            res * (-alpha) * ((a == b ? 1.0 : 0.0) - inv);
                } else if (g - fx[a] > 0.0) {
                    const double F = std::exp(p.aux[static_cast<std::size_t>(x) * A + a]);
                    const double inv = 1.0 / static_cast<double>(s.size());
                    for (int b : s) grad[nv + static_cast<std::size_t>(x) * A + b] += res * F * inv;
                    grad[nv + static_cast<std::size_t>(x) * A + a] -= res * F;
                    // aux gradient: d lambda / d aux = lambda
                    grad[nv + nf + static_cast<std::size_t>(x) * A + a] += res * w.lam(x, a, A);
                }
                // u gradient: d(-Lambda)/du = alpha/2 sigmoid'
                grad[nv + nf + na + x] += res * 0.5 * alpha * sig * (1.0 - sig);
            }
        }
        auto read = [&](std::size_t i) -> double& {
            if (i < nv) return p.v[i];
            if (i < nv + nf) return p.f[i - nv];
            if (i < nv + nf + na) return p.aux[i - nv - nf];
            return p.u[i - nv - nf - na];
        };
        const double bc1 = 1.0 - std::pow(b1, it), bc2 = 1.0 - std::pow(b2, it);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m1[i] = b1 * m1[i] + (1.0 - b1) * grad[i];
            m2[i] = b2 * m2[i] + (1.0 - b2) * grad[i] * grad[i];
            read(i) -= lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
        }
    }
    WitnessSearchResult out;
    out.w = detail::realize_witness(m, p, alpha);
    out.tau = max_abs_residual(m, out.w, alpha);
    return out;
}

}  // namespace spcl
