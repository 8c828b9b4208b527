#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace spcl {

/// Per-action score vector (Q-values or raw logits) at one state. Callers
/// that need temperature scaling pass q/alpha explicitly; none of the
/// operators below rescale their argument.
using ActionScores = std::vector<double>;

/// Probability vector over actions together with its exact support
/// (the ascending indices of strictly positive entries).
struct PolicyDistribution {
    std::vector<double> probs;
    std::vector<int> support;

    int n_actions() const { return static_cast<int>(probs.size()); }

    void validate(double tol = 1e-12) const {
        double total = 0.0;
        for (double p : probs) {
            if (p < 0.0 || !std::isfinite(p)) throw std::domain_error("PolicyDistribution: negative or non-finite entry");
            total += p;
        }
        if (std::abs(total - 1.0) > tol) throw std::domain_error("PolicyDistribution: probabilities do not sum to 1");
        std::vector<int> expect;
        for (int a = 0; a < n_actions(); ++a)
            if (probs[a] > 0.0) expect.push_back(a);
        if (expect != support) throw std::domain_error("PolicyDistribution: support does not match positive entries");
    }
};

namespace detail {
inline void require_nonempty(const ActionScores& z, const char* who) {
    if (z.empty()) throw std::domain_error(std::string(who) + ": empty score vector");
}
}  // namespace detail

/// log-sum-exp with max shift.
inline double sfmax(const ActionScores& z) {
    detail::require_nonempty(z, "sfmax");
    const double m = *std::max_element(z.begin(), z.end());
    double acc = 0.0;
    for (double v : z) acc += std::exp(v - m);
    return m + std::log(acc);
}

inline PolicyDistribution softmax_policy(const ActionScores& q, double alpha) {
    if (!(alpha > 0.0)) throw std::domain_error("softmax_policy: alpha must be positive");
    detail::require_nonempty(q, "softmax_policy");
    const int n = static_cast<int>(q.size());
    const double m = *std::max_element(q.begin(), q.end());
    PolicyDistribution out;
    out.probs.resize(n);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
        out.probs[a] = std::exp((q[a] - m) / alpha);
        total += out.probs[a];
    }
    out.support.resize(n);
    std::iota(out.support.begin(), out.support.end(), 0);
    for (int a = 0; a < n; ++a) out.probs[a] /= total;
    return out;
}

/// Actions kept by the sparse projection: sort descending (stable, ascending
/// index breaks ties) and keep the longest prefix k with
/// 1 + k*z_(k) > sum_{j<=k} z_(j). Comparisons are exact; the projection is
/// continuous at ties so boundary classification does not change the result.
inline std::vector<int> support_set(const ActionScores& z) {
    detail::require_nonempty(z, "support_set");
    const int n = static_cast<int>(z.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&z](int a, int b) { return z[a] > z[b]; });
    double cum = 0.0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
        const double zi = z[order[i]];
        cum += zi;
        if (1.0 + static_cast<double>(i + 1) * zi > cum) k = i + 1;
    }
    std::vector<int> s(order.begin(), order.begin() + k);
    std::sort(s.begin(), s.end());
    return s;
}

/// Threshold subtracted by the projection so the positive part sums to one.
inline double g_threshold(const ActionScores& z, const std::vector<int>& support) {
    if (support.empty()) throw std::domain_error("g_threshold: empty support");
    double acc = 0.0;
    for (int a : support) acc += z[a];
    return (acc - 1.0) / static_cast<double>(support.size());
}

/// Euclidean projection of a pre-scaled score vector onto the probability
/// simplex: (z - G(z))^+ on the support, zero elsewhere.
inline PolicyDistribution sparsemax_from_scores(const ActionScores& z) {
    const std::vector<int> s = support_set(z);
    const double g = g_threshold(z, s);
    PolicyDistribution out;
    out.probs.assign(z.size(), 0.0);
    for (int a : s) out.probs[a] = std::max(z[a] - g, 0.0);
    for (int a = 0; a < static_cast<int>(z.size()); ++a)
        if (out.probs[a] > 0.0) out.support.push_back(a);
    return out;
}

inline PolicyDistribution sparsemax_policy(const ActionScores& q, double alpha) {
    if (!(alpha > 0.0)) throw std::domain_error("sparsemax_policy: alpha must be positive");
    detail::require_nonempty(q, "sparsemax_policy");
    ActionScores z(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) z[a] = q[a] / alpha;
    return sparsemax_from_scores(z);
}

/// Tsallis-regularized maximum of a pre-scaled score vector:
///   spmax(z) = 1/2 [1 + sum_{a in S} (z_a^2 - G(z)^2)]
///            = max_{mu in simplex} mu.z + 1/2 (1 - |mu|^2),
/// attained by sparsemax_from_scores(z).
inline double spmax(const ActionScores& z) {
    detail::require_nonempty(z, "spmax");
    const std::vector<int> s = support_set(z);
    const double g = g_threshold(z, s);
    double acc = 0.0;
    for (int a : s) acc += z[a] * z[a] - g * g;
    return 0.5 * (1.0 + acc);
}

/// Tsallis entropy with q=2, k=1/2: 1/2 (1 - sum mu^2).
inline double tsallis_entropy(const PolicyDistribution& mu) {
    double sq = 0.0;
    for (double p : mu.probs) sq += p * p;
    return 0.5 * (1.0 - sq);
}

/// Shannon entropy; 0 log 0 := 0.
inline double shannon_entropy(const PolicyDistribution& mu) {
    double acc = 0.0;
    for (int a : mu.support) acc -= mu.probs[a] * std::log(mu.probs[a]);
    return acc;
}

}  // namespace spcl
