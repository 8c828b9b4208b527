#pragma once

// Executable invariant suites behind `spcl check` and the acceptance tests.
// Each suite compares the fast implementations against the independent
// oracles in spcl/oracles.hpp or against closed-form identities.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spcl/consistency.hpp"
#include "spcl/core_math.hpp"
#include "spcl/function_approx.hpp"
#include "spcl/mdp.hpp"
#include "spcl/oracles.hpp"
#include "spcl/pcl_trainer.hpp"
#include "spcl/rng.hpp"

namespace spcl::checks {

struct SuiteReport {
    std::string suite;
    long trials = 0;
    double max_violation = 0.0;
    bool ok = true;
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    void record(const std::string& what, double violation, double tol) {
        max_violation = std::max(max_violation, violation);
        if (!(violation <= tol)) {
            ok = false;
            if (failures.size() < 20)
                failures.push_back(what + ": violation " + std::to_string(violation) + " > tol " +
                                   std::to_string(tol));
        }
    }
};

/// Worst deviation of a candidate projection-policy function from the
/// brute-force active-set simplex projection, over seeded random inputs
/// (lengths 1..12, alpha in {0.1, 1, 10}).
template <class SparsemaxFn>
inline double projection_oracle_violation(SparsemaxFn&& fn, std::uint64_t seed, long trials) {
    Rng rng(seed);
    const double alphas[] = {0.1, 1.0, 10.0};
    double worst = 0.0;
    for (long t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 1, 12);
        const double alpha = alphas[t % 3];
        ActionScores q(n), z(n);
        for (int a = 0; a < n; ++a) {
            q[a] = uniform_in(rng, -3.0, 3.0);
            z[a] = q[a] / alpha;
        }
        const std::vector<double> expect = oracle::project_simplex_bruteforce(z);
        const PolicyDistribution got = fn(q, alpha);
        for (int a = 0; a < n; ++a) worst = std::max(worst, std::abs(got.probs[a] - expect[a]));
    }
    return worst;
}

/// Worst deviation of spmax from the plug-in variational value
/// mu.z + H_sp(mu) at mu = sparsemax(z), over seeded random inputs.
inline double spmax_plugin_violation(std::uint64_t seed, long trials) {
    Rng rng(seed);
    const double alphas[] = {0.1, 1.0, 10.0};
    double worst = 0.0;
    for (long t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 1, 12);
        const double alpha = alphas[t % 3];
        ActionScores z(n);
        for (int a = 0; a < n; ++a) z[a] = uniform_in(rng, -3.0, 3.0) / alpha;
        const PolicyDistribution mu = sparsemax_from_scores(z);
        worst = std::max(worst, std::abs(spmax(z) - oracle::tsallis_value_at(mu.probs, z)));
    }
    return worst;
}

inline SuiteReport run_operator_suite(std::uint64_t seed, long trials) {
    SuiteReport rep;
    rep.suite = "operators";
    rep.trials = trials;
    rep.record("sparsemax vs projection oracle",
               projection_oracle_violation([](const ActionScores& q, double a) { return sparsemax_policy(q, a); },
                                           seed, trials),
               1e-10);
    rep.record("spmax vs plug-in value", spmax_plugin_violation(seed + 1, trials), 1e-12);

    Rng rng(seed + 2);
    for (long t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 1, 12);
        ActionScores z(n);
        for (int a = 0; a < n; ++a) z[a] = uniform_in(rng, -3.0, 3.0);
        rep.record("sfmax vs naive", std::abs(sfmax(z) - oracle::sfmax_naive(z)), 1e-12);

        const std::vector<int> s = support_set(z);
        const double g = g_threshold(z, s);
        double mass = 0.0;
        for (double zv : z) mass += std::max(zv - g, 0.0);
        rep.record("projection normalization", std::abs(mass - 1.0), 1e-12);

        const double c = uniform_in(rng, -2.0, 2.0);
        ActionScores shifted = z;
        for (double& zv : shifted) zv += c;
        rep.record("spmax translation", std::abs(spmax(shifted) - spmax(z) - c), 1e-10);
        rep.record("sfmax translation", std::abs(sfmax(shifted) - sfmax(z) - c), 1e-10);

        // permutation equivariance: reverse is permutation enough
        ActionScores rev(z.rbegin(), z.rend());
        const PolicyDistribution mu = sparsemax_from_scores(z);
        const PolicyDistribution mu_rev = sparsemax_from_scores(rev);
        double perm = std::abs(spmax(rev) - spmax(z));
        for (int a = 0; a < n; ++a) perm = std::max(perm, std::abs(mu_rev.probs[n - 1 - a] - mu.probs[a]));
        rep.record("permutation equivariance", perm, 1e-12);

        // dominance and the alpha -> 0 limit
        const double zmax = *std::max_element(z.begin(), z.end());
        rep.record("spmax dominance", zmax - spmax(z), 1e-12);
        rep.record("sfmax dominance", zmax - sfmax(z), 1e-12);
        ActionScores zs(n);
        const double small = 1e-6;
        for (int a = 0; a < n; ++a) zs[a] = z[a] / small;
        rep.record("spmax small-alpha limit", std::abs(small * spmax(zs) - zmax), 1e-4);
        rep.record("sfmax small-alpha limit", std::abs(small * sfmax(zs) - zmax), 1e-4);
    }
    return rep;
}

inline SuiteReport run_mdp_suite(std::uint64_t seed, long trials) {
    SuiteReport rep;
    rep.suite = "mdp";
    rep.trials = trials;
    Rng rng(seed);
    const BackupKind kinds[] = {BackupKind::Max, BackupKind::Soft, BackupKind::Sparse};
    for (long t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 2, 8);
        const int A = uniform_int(rng, 1, 5);
        const double gamma = uniform_in(rng, 0.7, 0.95);
        const double alpha = uniform_in(rng, 0.2, 2.0);
        const TabularMDP m = random_mdp(rng, n, A, gamma);

        ValueFunction v1(n), v2(n);
        for (int x = 0; x < n; ++x) {
            v1[x] = uniform_in(rng, -5.0, 5.0);
            v2[x] = uniform_in(rng, -5.0, 5.0);
        }
        for (BackupKind k : kinds) {
            const ValueFunction t1 = backup(m, v1, k, alpha);
            const ValueFunction t2 = backup(m, v2, k, alpha);
            double dv = 0.0, dt = 0.0;
            for (int x = 0; x < n; ++x) {
                dv = std::max(dv, std::abs(v1[x] - v2[x]));
                dt = std::max(dt, std::abs(t1[x] - t2[x]));
            }
            rep.record("gamma contraction", dt - gamma * dv, 1e-12);

            const double beta = uniform_in(rng, -3.0, 3.0);
            ValueFunction shifted = v1;
            for (double& vv : shifted) vv += beta;
            const ValueFunction ts = backup(m, shifted, k, alpha);
            double terr = 0.0;
            for (int x = 0; x < n; ++x) terr = std::max(terr, std::abs(ts[x] - (t1[x] + gamma * beta)));
            rep.record("translation", terr, 1e-10);

            ValueFunction above = v1;
            for (double& vv : above) vv += std::abs(uniform_in(rng, 0.0, 2.0));
            const ValueFunction ta = backup(m, above, k, alpha);
            double mono = 0.0;
            for (int x = 0; x < n; ++x) mono = std::max(mono, t1[x] - ta[x]);
            rep.record("monotonicity", mono, 1e-12);
        }

        // operator ordering per state
        const ValueFunction bmax = backup(m, v1, BackupKind::Max, alpha);
        const ValueFunction bsf = backup(m, v1, BackupKind::Soft, alpha);
        const ValueFunction bsp = backup(m, v1, BackupKind::Sparse, alpha);
        for (int x = 0; x < n; ++x) {
            rep.record("max <= sparse backup", bmax[x] - bsp[x], 1e-12);
            rep.record("max <= soft backup", bmax[x] - bsf[x], 1e-12);
            rep.record("sparse backup <= max + alpha/2", bsp[x] - bmax[x] - 0.5 * alpha, 1e-12);
            rep.record("sparse <= soft + alpha(1/2 + log A)",
                       bsp[x] - bsf[x] - alpha * (0.5 + std::log(static_cast<double>(A))), 1e-12);
        }

        // fixed-point uniqueness from two starts
        const double tol = 1e-10;
        for (BackupKind k : kinds) {
            const ValueIterationResult r0 = value_iteration(m, k, alpha, tol);
            ValueFunction vr(n);
            for (int x = 0; x < n; ++x) vr[x] = uniform_in(rng, -10.0, 10.0);
            const ValueIterationResult r1 = value_iteration(m, k, alpha, tol, 1000000, vr);
            double diff = 0.0;
            for (int x = 0; x < n; ++x) diff = std::max(diff, std::abs(r0.v[x] - r1.v[x]));
            rep.record("fixed-point uniqueness", diff, 2.0 * tol / (1.0 - gamma));
        }

        // sandwich bounds of both regularized optimal policies
        const BoundReport bounds = check_bounds(m, alpha);
        rep.record("soft sandwich bound", bounds.max_soft_gap - bounds.soft_bound, 1e-8);
        rep.record("sparse sandwich bound", bounds.max_sparse_gap - bounds.sparse_bound, 1e-8);
        rep.record("policy value upper bound", bounds.max_upper_violation, 1e-8);

        // sparse policy evaluation recovers the sparse optimum
        const ValueFunction v_sp = value_iteration(m, BackupKind::Sparse, alpha, tol).v;
        const TabularPolicy mu_sp = extract_policy(m, v_sp, BackupKind::Sparse, alpha);
        const ValueFunction v_eval = policy_evaluation(m, mu_sp, Objective::Sparse, alpha);
        double opt_err = 0.0;
        for (int x = 0; x < n; ++x) opt_err = std::max(opt_err, std::abs(v_eval[x] - v_sp[x]));
        rep.record("sparse optimality cross-check", opt_err, 1e-8);

        // extracted support matches the operator support
        for (int x = 0; x < n; ++x) {
            ActionScores z = q_row(m, v_sp, x);
            for (double& q : z) q /= alpha;
            if (mu_sp.dist[x].support != support_set(z)) rep.record("extracted policy support", 1.0, 0.0);
        }
    }
    return rep;
}

inline SuiteReport run_consistency_suite(std::uint64_t seed, long trials) {
    SuiteReport rep;
    rep.suite = "consistency";
    rep.trials = trials;
    Rng rng(seed);
    for (long t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 2, 10);
        const int A = uniform_int(rng, 1, 6);
        const double gamma = uniform_in(rng, 0.7, 0.95);
        const double alpha = uniform_in(rng, 0.2, 1.5);
        const TabularMDP m = random_mdp(rng, n, A, gamma);

        const ValueFunction v_sp = value_iteration(m, BackupKind::Sparse, alpha, 1e-12).v;
        const TabularPolicy mu_sp = extract_policy(m, v_sp, BackupKind::Sparse, alpha);
        const ConsistencyWitness w = construct_witness(m, v_sp, mu_sp, alpha);
        rep.record("optimal witness residual", max_abs_residual(m, w, alpha), 1e-8);
        rep.record("witness constraints", witness_constraint_violation(m, w, alpha), 1e-10);

        // multi-step residual vanishes and telescopes
        for (int d = 1; d <= 5; ++d) {
            std::vector<int> actions(d);
            for (int& a : actions) a = uniform_int(rng, 0, A - 1);
            const int x0 = uniform_int(rng, 0, n - 1);
            rep.record("multi-step residual", std::abs(multi_step_residual_exact(m, w, x0, actions, alpha)), 1e-8);

            std::vector<double> dist(n, 0.0);
            dist[x0] = 1.0;
            double telescoped = 0.0, disc = 1.0;
            for (int s = 0; s < d; ++s) {
                std::vector<double> next(n, 0.0);
                for (int x = 0; x < n; ++x) {
                    if (dist[x] == 0.0) continue;
                    telescoped += disc * dist[x] * one_step_residual(m, w, x, actions[s], alpha);
                    for (int y = 0; y < n; ++y) next[y] += dist[x] * m.p(x, actions[s], y);
                }
                dist = std::move(next);
                disc *= gamma;
            }
            rep.record("telescoping identity",
                       std::abs(multi_step_residual_exact(m, w, x0, actions, alpha) - telescoped), 1e-10);
        }

        const GapReport t2 = check_sparse_gap(m, w, alpha);
        if (!t2.ok) rep.record("sparse near-optimality gap", t2.worst_gap - t2.bound - t2.slack, 0.0);
        rep.record("optimal witness sparse gap", t2.worst_gap, 1e-8);
        const GapReport cor = check_original_gap(m, w, alpha);
        if (!cor.ok) rep.record("original-MDP near-optimality gap", cor.worst_gap - cor.bound - cor.slack, 0.0);
        if (rep.notes.size() < 5)
            rep.notes.push_back("sparse_gap worst=" + std::to_string(t2.worst_gap) + " bound=" +
                                std::to_string(t2.bound) + " | original_gap worst=" +
                                std::to_string(cor.worst_gap) + " bound=" + std::to_string(cor.bound) +
                                " tau=" + std::to_string(t2.tau));

        // soft baseline: the soft-optimal pair has zero soft residual
        const ValueFunction v_sf = value_iteration(m, BackupKind::Soft, alpha, 1e-12).v;
        const TabularPolicy mu_sf = extract_policy(m, v_sf, BackupKind::Soft, alpha);
        double soft_res = 0.0;
        for (int x = 0; x < n; ++x)
            for (int a = 0; a < A; ++a)
                soft_res = std::max(soft_res, std::abs(soft_consistency_residual(m, v_sf, mu_sf, x, a, alpha)));
        rep.record("soft-optimal soft residual", soft_res, 1e-8);

        // searched (approximately) consistent witnesses still satisfy the bounds
        if (t % 5 == 0) {
            const WitnessSearchResult found = search_consistent_witness(m, alpha, rng);
            rep.record("searched witness constraints", witness_constraint_violation(m, found.w, alpha), 1e-10);
            const GapReport st2 = check_sparse_gap(m, found.w, alpha);
            if (!st2.ok) rep.record("searched-witness sparse gap", st2.worst_gap - st2.bound - st2.slack, 0.0);
            const GapReport scor = check_original_gap(m, found.w, alpha);
            if (!scor.ok) rep.record("searched-witness original gap", scor.worst_gap - scor.bound - scor.slack, 0.0);
        }
    }
    return rep;
}

/// One randomized model/batch pair for gradient checking. Parameters are
/// redrawn until every window state sits away from the relu/support kinks,
/// where the piecewise-smooth heads are differentiable.
namespace detail {

inline Model make_random_model(Rng& rng, int which, int obs_dim, int n_actions, double alpha) {
    ModelSpec spec;
    switch (which % 7) {
        case 0: spec.trunk = TrunkKind::Tabular; break;
        case 1: spec.trunk = TrunkKind::Tabular; spec.unified = true; break;
        case 2: spec.trunk = TrunkKind::Tabular; spec.policy = PolicyHead::Softmax; break;
        case 3: spec.trunk = TrunkKind::Linear; break;
        case 4: spec.trunk = TrunkKind::Mlp; spec.hidden = {8, 8}; break;
        case 5: spec.trunk = TrunkKind::Mlp; spec.hidden = {8, 8}; spec.policy = PolicyHead::Softmax; break;
        case 6: spec.trunk = TrunkKind::Mlp; spec.hidden = {8, 8}; spec.unified = true; break;
    }
    if (which % 2 == 0) spec.lambda_factor = LambdaFactor::Scalar;
    (void)rng;
    return Model(spec, obs_dim, n_actions, alpha);
}

inline std::vector<SubTrajectory> make_random_batch(Rng& rng, const Model& model, int n_windows, int d) {
    std::vector<SubTrajectory> batch(n_windows);
    for (auto& w : batch) {
        w.rollout = d;
        w.terminal_cut = uniform01(rng) < 0.3;
        const int e = w.terminal_cut ? uniform_int(rng, 1, d) : d;
        for (int t = 0; t <= e; ++t) {
            ModelInput in(model.expected_input_size());
            if (model.spec().trunk == TrunkKind::Tabular)
                in[0] = uniform_int(rng, 0, model.obs_dim() - 1);
            else
                for (double& x : in) x = uniform_in(rng, -1.0, 1.0);
            w.states.push_back(std::move(in));
        }
        for (int t = 0; t < e; ++t) {
            w.actions.push_back(uniform_int(rng, 0, model.n_actions() - 1));
            w.rewards.push_back(uniform_in(rng, 0.0, 1.0));
        }
    }
    return batch;
}

inline bool near_kink(Model& model, const std::vector<SubTrajectory>& batch, double margin) {
    for (const auto& w : batch)
        for (const auto& s : w.states) {
            const Model::Cache c = model.forward(s);
            if (model.spec().policy == PolicyHead::Sparsemax) {
                ActionScores z = c.out.raw_scores;
                if (model.spec().unified)
                    for (double& q : z) q /= model.alpha();
                const double g = g_threshold(z, support_set(z));
                for (double zv : z)
                    if (std::abs(zv - g) < margin) return true;
            }
            if (model.spec().trunk == TrunkKind::Mlp && model.spec().activation == Activation::Relu)
                for (const auto& nc : c.nets)
                    for (const auto& pre : nc.pre)
                        for (double p : pre)
                            if (std::abs(p) < margin) return true;
        }
    return false;
}

}  // namespace detail

/// Max relative finite-difference error of the batch loss gradient.
inline double gradient_check_once(Model& model, std::span<const SubTrajectory> batch, bool soft, double alpha,
                                  double gamma, double h = 1e-5) {
    const LossGrads lg = spcl::detail::batch_loss_and_grads(batch, model, alpha, gamma, soft);
    std::vector<double>& p = model.params().data;
    const std::vector<double> fd = finite_difference_gradient(
        [&]() { return spcl::detail::batch_loss_and_grads(batch, model, alpha, gamma, soft).loss; }, p, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double denom = std::max({1.0, std::abs(lg.grads.data[i]), std::abs(fd[i])});
        worst = std::max(worst, std::abs(lg.grads.data[i] - fd[i]) / denom);
    }
    return worst;
}

inline SuiteReport run_gradient_suite(std::uint64_t seed, long trials) {
    SuiteReport rep;
    rep.suite = "gradients";
    rep.trials = trials;
    Rng rng(seed);
    for (long t = 0; t < trials; ++t) {
        const int A = uniform_int(rng, 2, 5);
        const int obs_dim = uniform_int(rng, 3, 6);
        const double alpha = uniform_in(rng, 0.3, 1.5);
        const double gamma = uniform_in(rng, 0.8, 0.95);
        Model model = detail::make_random_model(rng, static_cast<int>(t), obs_dim, A, alpha);
        std::vector<SubTrajectory> batch;
        bool found = false;
        for (int attempt = 0; attempt < 50 && !found; ++attempt) {
            for (double& pv : model.params().data) pv = uniform_in(rng, -1.0, 1.0);
            batch = detail::make_random_batch(rng, model, 3, 3);
            found = !detail::near_kink(model, batch, 1e-3);
        }
        if (!found) {
            rep.record("kink-free draw", 1.0, 0.0);
            continue;
        }
        const bool soft = model.spec().policy == PolicyHead::Softmax;
        rep.record("loss gradient finite differences", gradient_check_once(model, batch, soft, alpha, gamma),
                   1e-5);

        // structural constraints on the same draws
        if (!soft) {
            for (const auto& w : batch)
                for (const auto& s : w.states) {
                    const ModelOutputs o = model.forward(s).out;
                    double mass = 0.0, slack = 0.0, lmin = 0.0;
                    for (int a = 0; a < A; ++a) {
                        mass += o.mu.probs[a];
                        slack = std::max(slack, std::abs(o.lambda[a] * o.mu.probs[a]));
                        lmin = std::min(lmin, o.lambda[a]);
                    }
                    rep.record("mu normalization", std::abs(mass - 1.0), 1e-10);
                    rep.record("complementary slackness", slack, 0.0);
                    rep.record("lambda nonnegative", -lmin, 0.0);
                    rep.record("Lambda box", std::max(o.Lambda - 0.0, -0.5 * alpha - o.Lambda), 0.0);
                }
        }
    }
    return rep;
}

inline std::vector<SuiteReport> run_suites(const std::string& which, std::uint64_t seed, long trials) {
    std::vector<SuiteReport> reps;
    const bool all = which == "all";
    if (all || which == "operators") reps.push_back(run_operator_suite(seed, trials));
    if (all || which == "mdp") reps.push_back(run_mdp_suite(seed + 1000, std::max(1L, trials / 4)));
    if (all || which == "consistency") reps.push_back(run_consistency_suite(seed + 2000, std::max(1L, trials / 10)));
    if (all || which == "gradients") reps.push_back(run_gradient_suite(seed + 3000, std::max(1L, trials / 10)));
    if (reps.empty()) throw std::invalid_argument("unknown suite: " + which);
    return reps;
}

}  // namespace spcl::checks
