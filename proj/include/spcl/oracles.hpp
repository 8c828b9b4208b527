#pragma once

// Reference implementations used only to cross-check the fast operators.
// Each one follows a different algorithmic route than the code it verifies
// (exhaustive enumeration / naive summation / derivative-free search), so a
// bug in the operators cannot hide in the oracle.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spcl/core_math.hpp"

namespace spcl::oracle {

/// Euclidean projection of z onto the probability simplex by enumerating all
/// 2^n - 1 candidate supports and keeping the feasible minimizer of
/// |mu - z|^2. Exponential cost; intended for n <= 20.
inline std::vector<double> project_simplex_bruteforce(const ActionScores& z) {
    const int n = static_cast<int>(z.size());
    if (n == 0) throw std::domain_error("project_simplex_bruteforce: empty input");
    if (n > 20) throw std::domain_error("project_simplex_bruteforce: too many actions");
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<double> best(n, 0.0);
    std::vector<double> cand(n);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        double sum = 0.0;
        int size = 0;
        for (int a = 0; a < n; ++a)
            if (mask & (1u << a)) {
                sum += z[a];
                ++size;
            }
        const double g = (sum - 1.0) / size;
        bool feasible = true;
        double obj = 0.0;
        for (int a = 0; a < n; ++a) {
            if (mask & (1u << a)) {
                cand[a] = z[a] - g;
                if (cand[a] < 0.0) {
                    feasible = false;
                    break;
                }
                obj += g * g;
            } else {
                cand[a] = 0.0;
                obj += z[a] * z[a];
            }
        }
        if (feasible && obj < best_obj) {
            best_obj = obj;
            best = cand;
        }
    }
    return best;
}

/// Unshifted log(sum exp); valid at small magnitudes only.
inline double sfmax_naive(const ActionScores& z) {
    double acc = 0.0;
    for (double v : z) acc += std::exp(v);
    return std::log(acc);
}

/// Objective maximized by spmax at a given feasible point.
inline double tsallis_value_at(const std::vector<double>& mu, const ActionScores& z) {
    double dot = 0.0, sq = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) {
        dot += mu[a] * z[a];
        sq += mu[a] * mu[a];
    }
    return dot + 0.5 * (1.0 - sq);
}

namespace detail {
// Enumerates compositions of m into n nonnegative parts, evaluating the
// Tsallis objective at each grid point mu = counts/m.
inline void grid_enumerate(const ActionScores& z, int m, std::vector<int>& counts, int pos, int left,
                           double& best, std::vector<int>& best_counts) {
    const int n = static_cast<int>(z.size());
    if (pos == n - 1) {
        counts[pos] = left;
        std::vector<double> mu(n);
        for (int a = 0; a < n; ++a) mu[a] = static_cast<double>(counts[a]) / m;
        const double val = tsallis_value_at(mu, z);
        if (val > best) {
            best = val;
            best_counts = counts;
        }
        return;
    }
    for (int c = 0; c <= left; ++c) {
        counts[pos] = c;
        grid_enumerate(z, m, counts, pos + 1, left - c, best, best_counts);
    }
}
}  // namespace detail

/// Derivative-free maximization of mu.z + H_sp(mu) over the simplex:
/// exhaustive enumeration on a coarse 1/m grid, then pairwise mass-exchange
/// hill climbing with the step halved repeatedly. The objective is strongly
/// concave, so the exchange walk converges to the grid-optimal point of each
/// resolution level.
inline double spmax_grid_search(const ActionScores& z, int coarse_m = 14, int refine_levels = 12) {
    const int n = static_cast<int>(z.size());
    if (n == 0) throw std::domain_error("spmax_grid_search: empty input");
    if (n == 1) return tsallis_value_at({1.0}, z);

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> counts(n, 0), best_counts(n, 0);
    detail::grid_enumerate(z, coarse_m, counts, 0, coarse_m, best, best_counts);

    std::vector<double> mu(n);
    long m = coarse_m;
    for (int a = 0; a < n; ++a) mu[a] = static_cast<double>(best_counts[a]) / m;
    double cur = best;
    for (int level = 0; level < refine_levels; ++level, m *= 2) {
        const double step = 1.0 / static_cast<double>(m);
        bool improved = true;
        while (improved) {
            improved = false;
            for (int from = 0; from < n; ++from) {
                if (mu[from] < step - 1e-15) continue;
                for (int to = 0; to < n; ++to) {
                    if (to == from) continue;
                    mu[from] -= step;
                    mu[to] += step;
                    const double val = tsallis_value_at(mu, z);
                    if (val > cur + 1e-15) {
                        cur = val;
                        improved = true;
                    } else {
                        mu[from] += step;
                        mu[to] -= step;
                    }
                }
            }
        }
    }
    return cur;
}

}  // namespace spcl::oracle
