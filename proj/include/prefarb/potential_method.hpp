#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "prefarb/preference_signal.hpp"

namespace prefarb {

// Per-security utilities (node potentials). Sum to zero when produced by
// solve_utilities().
struct UtilityVector {
    std::vector<double> u;

    std::size_t size() const noexcept { return u.size(); }
    double operator[](std::size_t i) const { return u[i]; }
    double& operator[](std::size_t i) { return u[i]; }
    double sum() const { return std::accumulate(u.begin(), u.end(), 0.0); }
};

// Preferences that are exact utility differences.
struct ConsistentPreferences {
    PreferenceMatrix rho_star;
};

/**
 * Least-squares projection of pairwise preferences onto utility differences.
 *
 * Minimizes ||B u - rho||^2 subject to sum(u) = 0, where B is the pair-by-
 * security incidence matrix of the complete graph. Because B^T B + J = N I,
 * the minimizer is u = B^T rho / N, i.e.
 *
 *   u[i] = (1/N) * sum_{j != i} rho(i, j).
 *
 * Evaluated by a single pass over the pair store; B is never formed.
 * Non-scoreable pairs hold 0 and so add nothing, but N stays the full count.
 */
inline UtilityVector solve_utilities(const PreferenceMatrix& rho) {
    const std::size_t n = rho.size();
    UtilityVector out{std::vector<double>(n, 0.0)};
    if (n == 0) return out;
    const auto values = rho.values();
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            row += values[k];
            out.u[j] -= values[k];
        }
        out.u[i] += row;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : out.u) v *= inv_n;
    return out;
}

inline ConsistentPreferences consistent_preferences(const UtilityVector& utilities) {
    const std::size_t n = utilities.size();
    for (double v : utilities.u) {
        if (!std::isfinite(v)) throw DomainError("utilities must be finite");
    }
    ConsistentPreferences out{PreferenceMatrix(n)};
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            out.rho_star.set_flat(k, utilities.u[i] - utilities.u[j]);
        }
    }
    return out;
}

}  // namespace prefarb
