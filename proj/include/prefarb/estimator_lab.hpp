#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/parallel.hpp"
#include "prefarb/potential_method.hpp"
#include "prefarb/preference_signal.hpp"
#include "prefarb/random.hpp"

namespace prefarb {

/**
 * Additive pair noise with equal variance and one common covariance across
 * all stored pairs (i < j):
 *
 *   eps_k = sqrt(cov) * z0 + sqrt(sigma2 - cov) * z_k
 */
struct NoiseModel {
    double sigma2 = 1.0;
    double cov = 0.0;
    std::size_t n_securities = 100;
    std::size_t n_trials = 100000;
    std::uint64_t seed = kDefaultSeed;

    void validate() const {
        if (!(sigma2 > 0.0)) throw ConfigError("noise variance must be positive");
        if (!(cov >= 0.0 && cov <= sigma2)) throw ConfigError("covariance must lie in [0, sigma2]");
        if (n_trials < 1) throw ConfigError("at least one trial is required");
        if (n_securities < 2) throw ConfigError("at least two securities are required");
    }
};

// Var[u*_i] under NoiseModel. The common factor enters u*_i with loading
// (N - 1 - 2i)/N, the net count of pairs in which i is the first element.
inline double theoretical_var_u(std::size_t i, std::size_t n, double sigma2, double cov) {
    const double nn = static_cast<double>(n);
    const double loading = (nn - 1.0 - 2.0 * static_cast<double>(i)) / nn;
    return (nn - 1.0) / (nn * nn) * (sigma2 - cov) + cov * loading * loading;
}

// Covariance part of Var[u*] averaged over securities; tends to cov/3.
inline double covariance_floor(std::size_t n, double cov) {
    const double nn = static_cast<double>(n);
    return cov * (nn * nn - 1.0) / (3.0 * nn * nn);
}

// Var[u*] averaged over securities.
inline double theoretical_mean_var_u(std::size_t n, double sigma2, double cov) {
    const double nn = static_cast<double>(n);
    return (nn - 1.0) / (nn * nn) * (sigma2 - cov) + covariance_floor(n, cov);
}

// ((N-1)/N^2) sigma^2 and 2(N-1)/N^2 sigma^2: the uncorrelated-noise
// variances of u* and rho* when eps(i,j) and eps(j,i) are treated as
// separate draws.
inline double uncorrelated_var_u(std::size_t n, double sigma2) {
    const double nn = static_cast<double>(n);
    return (nn - 1.0) / (nn * nn) * sigma2;
}

inline double uncorrelated_var_rho(std::size_t n, double sigma2) {
    return 2.0 * uncorrelated_var_u(n, sigma2);
}

// Var[rho*(i,j)] for cov = 0 with antisymmetric pair noise, where
// eps(j,i) = -eps(i,j) enters both utilities: 2 sigma^2 / N.
inline double antisymmetric_var_rho(std::size_t n, double sigma2) {
    return 2.0 * sigma2 / static_cast<double>(n);
}

struct EstimatorStats {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::vector<double> bias_u;   // mean of u* - u_true per security
    std::vector<double> var_u;    // sample variance of u* per security
    std::vector<double> bias_rho; // per pair; empty unless tracked
    std::vector<double> var_rho;
    double mean_var_u = 0.0;
    double mean_var_rho = 0.0;
    double max_standardized_bias_u = 0.0;
    double max_standardized_bias_rho = 0.0;
};

struct SimulationOptions {
    unsigned threads = 1;
    bool track_preferences = true;  // per-pair moments cost O(N^2) memory per worker
};

namespace detail {

struct MomentSums {
    std::vector<double> u_sum, u_sq, r_sum, r_sq;

    MomentSums(std::size_t n, std::size_t pairs)
        : u_sum(n, 0.0), u_sq(n, 0.0), r_sum(pairs, 0.0), r_sq(pairs, 0.0) {}

    void merge(const MomentSums& o) {
        for (std::size_t i = 0; i < u_sum.size(); ++i) {
            u_sum[i] += o.u_sum[i];
            u_sq[i] += o.u_sq[i];
        }
        for (std::size_t k = 0; k < r_sum.size(); ++k) {
            r_sum[k] += o.r_sum[k];
            r_sq[k] += o.r_sq[k];
        }
    }
};

inline void finish_moments(const std::vector<double>& sum, const std::vector<double>& sq,
                           double trials, std::vector<double>& bias, std::vector<double>& var,
                           double& mean_var, double& max_z) {
    bias.resize(sum.size());
    var.resize(sum.size());
    mean_var = 0.0;
    max_z = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        bias[i] = sum[i] / trials;
        var[i] = trials > 1.0 ? std::max(0.0, (sq[i] - sum[i] * bias[i]) / (trials - 1.0)) : 0.0;
        mean_var += var[i];
        const double se = std::sqrt(var[i] / trials);
        if (se > 0.0) max_z = std::max(max_z, std::abs(bias[i]) / se);
    }
    if (!sum.empty()) mean_var /= static_cast<double>(sum.size());
}

}  // namespace detail

/**
 * Monte Carlo of the potential-method estimator: each trial forms
 * rho = B u_true + eps, solves for u*, sets rho* = B u*, and accumulates the
 * errors against u_true and B u_true.
 *
 * Trials are split into a fixed number of chunks, each with its own RNG
 * stream, and chunk moments are merged in chunk order, so the result is the
 * same for any thread count.
 */
inline EstimatorStats simulate_estimator(const UtilityVector& true_u, const NoiseModel& noise,
                                         const SimulationOptions& options = {}) {
    noise.validate();
    const std::size_t n = noise.n_securities;
    if (true_u.size() != n) throw SizeError("true utility vector must have n_securities entries");
    if (std::abs(true_u.sum()) > 1e-9 * static_cast<double>(n) + 1e-12) {
        throw DomainError("true utilities must sum to zero");
    }
    const std::size_t pairs = num_pairs(n);
    const std::size_t tracked_pairs = options.track_preferences ? pairs : 0;
    const auto true_rho = consistent_preferences(true_u).rho_star;
    const auto true_values = true_rho.values();

    constexpr std::size_t kChunks = 64;
    const std::size_t chunks = std::min(kChunks, noise.n_trials);
    const double common_sd = std::sqrt(noise.cov);
    const double own_sd = std::sqrt(noise.sigma2 - noise.cov);

    detail::MomentSums total(n, tracked_pairs);
    const unsigned workers = std::max(1u, options.threads);
    for (std::size_t first = 0; first < chunks; first += workers) {
        const std::size_t batch = std::min<std::size_t>(workers, chunks - first);
        std::vector<detail::MomentSums> partial(batch, detail::MomentSums(n, tracked_pairs));
        parallel_for(batch, workers, [&](std::size_t b) {
            const std::size_t chunk = first + b;
            const std::size_t begin = noise.n_trials * chunk / chunks;
            const std::size_t end = noise.n_trials * (chunk + 1) / chunks;
            auto rng = make_stream(noise.seed, chunk);
            std::normal_distribution<double> gauss(0.0, 1.0);
            auto& acc = partial[b];
            PreferenceMatrix rho(n);
            auto values = rho.values();
            for (std::size_t trial = begin; trial < end; ++trial) {
                const double common = common_sd * gauss(rng);
                for (std::size_t k = 0; k < pairs; ++k) {
                    values[k] = true_values[k] + common + own_sd * gauss(rng);
                }
                const auto u = solve_utilities(rho);
                for (std::size_t i = 0; i < n; ++i) {
                    const double e = u[i] - true_u[i];
                    acc.u_sum[i] += e;
                    acc.u_sq[i] += e * e;
                }
                if (tracked_pairs == 0) continue;
                std::size_t k = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = i + 1; j < n; ++j, ++k) {
                        const double e = (u[i] - u[j]) - true_values[k];
                        acc.r_sum[k] += e;
                        acc.r_sq[k] += e * e;
                    }
                }
            }
        });
        for (const auto& p : partial) total.merge(p);
    }

    EstimatorStats out;
    out.n = n;
    out.trials = noise.n_trials;
    const double trials = static_cast<double>(noise.n_trials);
    detail::finish_moments(total.u_sum, total.u_sq, trials, out.bias_u, out.var_u,
                           out.mean_var_u, out.max_standardized_bias_u);
    if (tracked_pairs > 0) {
        detail::finish_moments(total.r_sum, total.r_sq, trials, out.bias_rho, out.var_rho,
                               out.mean_var_rho, out.max_standardized_bias_rho);
    }
    return out;
}

// Largest |mean error| / (standard error of the mean) over securities.
inline double bias_test(const UtilityVector& true_u, const NoiseModel& noise,
                        const SimulationOptions& options = {}) {
    SimulationOptions opts = options;
    opts.track_preferences = false;
    return simulate_estimator(true_u, noise, opts).max_standardized_bias_u;
}

// Zero-sum utilities drawn from N(0, 1) and centred.
inline UtilityVector random_utilities(std::size_t n, std::uint64_t seed) {
    auto rng = make_stream(seed, 0xA11CE);
    std::normal_distribution<double> gauss(0.0, 1.0);
    UtilityVector u{std::vector<double>(n)};
    for (auto& v : u.u) v = gauss(rng);
    const double m = u.sum() / static_cast<double>(n);
    for (auto& v : u.u) v -= m;
    return u;
}

struct VarianceStudyRow {
    std::size_t n = 0;
    double cov = 0.0;
    double theoretical_var = 0.0;
    double empirical_var = 0.0;
};

inline VarianceStudyRow variance_study_point(std::size_t n, double cov, double sigma2,
                                             std::size_t trials, std::uint64_t seed,
                                             unsigned threads = 1) {
    NoiseModel noise{sigma2, cov, n, trials, stream_seed(seed, n * 1000003ULL)};
    SimulationOptions options{threads, false};
    const auto stats = simulate_estimator(random_utilities(n, seed), noise, options);
    return {n, cov, theoretical_mean_var_u(n, sigma2, cov), stats.mean_var_u};
}

}  // namespace prefarb
