#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace spcl {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Dirichlet(1,...,1) row: i.i.d. Exp(1) draws, normalized.
inline std::vector<double> dirichlet_uniform(Rng& rng, int n) {
    std::vector<double> row(n);
    double total = 0.0;
    std::exponential_distribution<double> expo(1.0);
    for (int i = 0; i < n; ++i) {
        row[i] = expo(rng);
        total += row[i];
    }
    for (int i = 0; i < n; ++i) row[i] /= total;
    return row;
}

/// Samples an index from a probability vector by inverse CDF walk.
inline int sample_categorical(Rng& rng, std::span<const double> probs) {
    if (probs.empty()) throw std::domain_error("sample_categorical: empty distribution");
    const double u = uniform01(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    // rounding can leave cum slightly below 1; fall back to the last positive entry
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return static_cast<int>(i);
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace spcl
