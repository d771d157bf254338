#pragma once

// Reference implementations kept deliberately naive: dense matrices,
// brute-force loops, no reuse of library internals beyond data types.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "prefarb/market_data.hpp"
#include "prefarb/preference_signal.hpp"

namespace oracle {

// Full incidence matrix over all ordered pairs (i, j), i != j: row (i,j) has
// +1 at i and -1 at j. Solves the constrained least-squares problem
//   min ||B u - rho||^2  s.t.  sum u = 0
// through the bordered normal equations [B^T B, 1; 1^T, 0].
inline std::vector<double> dense_utilities(const prefarb::PreferenceMatrix& rho) {
    const auto n = static_cast<Eigen::Index>(rho.size());
    const Eigen::Index rows = n * (n - 1);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, n);
    Eigen::VectorXd r(rows);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            b(row, i) = 1.0;
            b(row, j) = -1.0;
            r(row) = rho.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            ++row;
        }
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = b.transpose() * b;
    kkt.block(0, n, n, 1).setOnes();
    kkt.block(n, 0, 1, n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs.head(n) = b.transpose() * r;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    return {sol.data(), sol.data() + n};
}

// Standardized spread by explicit loops, both conventions.
inline double preference(const prefarb::PricePanel& p, std::size_t t, std::size_t i,
                         std::size_t j, std::size_t lookback, bool reduced) {
    std::vector<double> c;
    for (std::size_t tau = t - lookback; tau < t; ++tau) {
        c.push_back(std::log(p.close(tau, i)) - std::log(p.close(tau, j)));
    }
    const double tl = static_cast<double>(lookback);
    double sum = 0.0;
    for (double v : c) sum += v;
    const double mu = reduced ? sum / (tl - 1.0) : sum / tl;
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    const double sigma = std::sqrt(reduced ? ss / (tl - 2.0) : ss / (tl - 1.0));
    const double now = std::log(p.close(t, i)) - std::log(p.close(t, j));
    return (now - mu) / sigma;
}

// Random antisymmetric preference matrix with all pairs scoreable.
inline prefarb::PreferenceMatrix random_preferences(std::size_t n, std::mt19937_64& rng,
                                                    double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    prefarb::PreferenceMatrix rho(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) rho.set(i, j, g(rng));
    }
    return rho;
}

// Random complete panel with log-normal closes and opens.
inline prefarb::PricePanel random_panel(std::size_t days, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.02);
    std::vector<double> open(days * n), close(days * n);
    std::vector<double> level(n, 0.0);
    for (std::size_t t = 0; t < days; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            open[t * n + i] = 50.0 * std::exp(level[i] + g(rng));
            level[i] += g(rng);
            close[t * n + i] = 50.0 * std::exp(level[i]);
        }
    }
    std::vector<std::string> tickers;
    for (std::size_t i = 0; i < n; ++i) tickers.push_back("T" + std::to_string(100 + i));
    const prefarb::Date start{std::chrono::year{2010} / std::chrono::January / 4};
    return prefarb::PricePanel(prefarb::business_days(start, days), tickers, open, close);
}

}  // namespace oracle
