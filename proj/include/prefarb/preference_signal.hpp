#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/market_data.hpp"

namespace prefarb {

// Below this spread dispersion (log units) a pair carries no signal.
inline constexpr double kSigmaEpsilon = 1e-10;

constexpr std::size_t num_pairs(std::size_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

// Position of (i, j), i < j, in lexicographic pair order.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
    if (i >= j) throw IndexOrderError("pair_index requires i < j");
    if (j >= n) throw IndexOrderError("pair_index requires j < n");
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

inline std::pair<std::size_t, std::size_t> pair_from_index(std::size_t k, std::size_t n) {
    if (k >= num_pairs(n)) throw IndexOrderError("pair index out of range");
    std::size_t i = 0;
    std::size_t row = n - 1;
    while (k >= row) {
        k -= row;
        ++i;
        --row;
    }
    return {i, i + 1 + k};
}

inline double log_spread(double p_i, double p_j) {
    if (!(p_i > 0.0) || !(p_j > 0.0)) throw DomainError("log_spread requires positive prices");
    return std::log(p_i / p_j);
}

/**
 * How the lookback mean and dispersion are estimated.
 *
 * `standard` is the ordinary sample mean (1/T) and sample standard deviation
 * (1/(T-1)). `reduced` divides the T-term sums by T-1 for the mean and by T-2
 * for the squared deviations from that mean, literally.
 */
enum class EstimatorConvention { standard, reduced };

inline std::string to_string(EstimatorConvention c) {
    return c == EstimatorConvention::reduced ? "reduced" : "standard";
}

inline EstimatorConvention parse_convention(const std::string& s) {
    if (s == "standard") return EstimatorConvention::standard;
    if (s == "reduced") return EstimatorConvention::reduced;
    throw ConfigError("unknown estimator convention '" + s + "'");
}

struct SpreadWindowStats {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t window_len = 0;
    bool degenerate = false;  // sigma < kSigmaEpsilon
};

inline SpreadWindowStats window_stats(std::span<const double> spreads,
                                      EstimatorConvention convention) {
    const std::size_t len = spreads.size();
    if (len < 3) throw LengthError("spread window needs at least 3 observations");
    const double count = static_cast<double>(len);
    double sum = 0.0;
    for (double c : spreads) sum += c;
    const double mu = convention == EstimatorConvention::reduced ? sum / (count - 1.0) : sum / count;
    double ss = 0.0;
    for (double c : spreads) ss += (c - mu) * (c - mu);
    const double sigma = std::sqrt(
        convention == EstimatorConvention::reduced ? ss / (count - 2.0) : ss / (count - 1.0));
    return {mu, sigma, len, sigma < kSigmaEpsilon};
}

/**
 * Pairwise preference values for i < j in lexicographic order, with an
 * implicit antisymmetric lower half. Non-scoreable pairs hold exactly 0.
 */
class PreferenceMatrix {
public:
    PreferenceMatrix() = default;
    explicit PreferenceMatrix(std::size_t n)
        : n_(n), values_(num_pairs(n), 0.0), scoreable_(num_pairs(n), 0) {}

    std::size_t size() const noexcept { return n_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    bool scoreable(std::size_t k) const { return scoreable_[k] != 0; }

    // rho(i, j) for any i != j; rho(i, i) = 0.
    double at(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return i < j ? values_[pair_index(i, j, n_)] : -values_[pair_index(j, i, n_)];
    }

    bool scoreable(std::size_t i, std::size_t j) const {
        if (i == j) return false;
        return scoreable_[i < j ? pair_index(i, j, n_) : pair_index(j, i, n_)] != 0;
    }

    // Sets rho(i, j); for i > j stores -value at (j, i).
    void set(std::size_t i, std::size_t j, double value) {
        if (i == j) throw IndexOrderError("preference of a security over itself is fixed at 0");
        if (i < j) {
            set_flat(pair_index(i, j, n_), value);
        } else {
            set_flat(pair_index(j, i, n_), -value);
        }
    }

    void set_flat(std::size_t k, double value) {
        values_[k] = value;
        scoreable_[k] = 1;
    }

    void clear_flat(std::size_t k) {
        values_[k] = 0.0;
        scoreable_[k] = 0;
    }

    // A security is scoreable when at least one of its pairs is.
    std::vector<bool> scoreable_securities() const {
        std::vector<bool> out(n_, false);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j, ++k) {
                if (scoreable_[k]) out[i] = out[j] = true;
            }
        }
        return out;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
    std::vector<unsigned char> scoreable_;
};

/**
 * Standardized log-spread preferences at date index t:
 *
 *   rho(i, j) = (c_ij(t) - mu) / sigma,  c_ij = log(close_i / close_j)
 *
 * with mu and sigma estimated on [t - lookback, t - 1]; the current spread is
 * not part of the window. A pair is scoreable only if both securities are
 * valid on every day of [t - lookback, t] and sigma >= kSigmaEpsilon.
 */
inline PreferenceMatrix preference_matrix(const PricePanel& panel, std::size_t t,
                                          std::size_t lookback, EstimatorConvention convention) {
    if (lookback < 3) throw ConfigError("lookback must be at least 3");
    if (t < lookback || t >= panel.num_days()) {
        throw DateRangeError("date index " + std::to_string(t) + " lacks a full lookback window");
    }
    const std::size_t n = panel.num_securities();
    std::vector<bool> usable(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t tau = t - lookback; tau <= t && usable[i]; ++tau) {
            usable[i] = panel.valid(tau, i);
        }
    }
    PreferenceMatrix out(n);
    std::vector<double> window(lookback);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            if (!usable[i] || !usable[j]) continue;
            for (std::size_t w = 0; w < lookback; ++w) {
                const std::size_t tau = t - lookback + w;
                window[w] = log_spread(panel.close(tau, i), panel.close(tau, j));
            }
            const auto stats = window_stats(window, convention);
            if (stats.degenerate) continue;
            const double current = log_spread(panel.close(t, i), panel.close(t, j));
            out.set_flat(k, (current - stats.mu) / stats.sigma);
        }
    }
    return out;
}

/**
 * Produces the same matrices as preference_matrix() for consecutive dates in
 * O(N^2) per step, using shifted rolling sums per pair. The rolling state is
 * rebuilt exactly every `lookback` steps, and a pair whose rolling variance
 * shows cancellation is recomputed with the two-pass formula.
 *
 * The matrix for date t depends only on closes up to t.
 */
class PreferenceStream {
public:
    PreferenceStream(const PricePanel& panel, std::size_t lookback, EstimatorConvention convention)
        : panel_(&panel), lookback_(lookback), convention_(convention) {
        if (lookback_ < 3) throw ConfigError("lookback must be at least 3");
        const std::size_t n = panel.num_securities();
        const std::size_t days = panel.num_days();
        log_close_.assign(days * n, 0.0);
        invalid_prefix_.assign((days + 1) * n, 0);
        for (std::size_t t = 0; t < days; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                const bool ok = panel.valid(t, i);
                if (ok) log_close_[t * n + i] = std::log(panel.close(t, i));
                invalid_prefix_[(t + 1) * n + i] = invalid_prefix_[t * n + i] + (ok ? 0 : 1);
            }
        }
        const std::size_t pairs = num_pairs(n);
        shift_.assign(pairs, 0.0);
        sum_.assign(pairs, 0.0);
        sum_sq_.assign(pairs, 0.0);
    }

    const PreferenceMatrix& at(std::size_t t) {
        if (t < lookback_ || t >= panel_->num_days()) {
            throw DateRangeError("date index " + std::to_string(t) +
                                 " lacks a full lookback window");
        }
        if (has_state_ && t == last_t_ + 1 && steps_since_rebuild_ + 1 < lookback_) {
            advance(t);
            ++steps_since_rebuild_;
        } else if (!(has_state_ && t == last_t_)) {
            rebuild(t);
            steps_since_rebuild_ = 0;
        }
        if (!(has_state_ && t == last_t_ && computed_)) evaluate(t);
        has_state_ = true;
        last_t_ = t;
        computed_ = true;
        return current_;
    }

private:
    double lc(std::size_t t, std::size_t i) const {
        return log_close_[t * panel_->num_securities() + i];
    }

    bool valid_range(std::size_t i, std::size_t first, std::size_t last) const {
        const std::size_t n = panel_->num_securities();
        return invalid_prefix_[(last + 1) * n + i] == invalid_prefix_[first * n + i];
    }

    // Window for date t is [t - lookback, t - 1]; invalid days contribute 0.
    void rebuild(std::size_t t) {
        const std::size_t n = panel_->num_securities();
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j, ++k) {
                double shift = 0.0;
                for (std::size_t tau = t - 1;; --tau) {
                    if (panel_->valid(tau, i) && panel_->valid(tau, j)) {
                        shift = lc(tau, i) - lc(tau, j);
                        break;
                    }
                    if (tau == t - lookback_) break;
                }
                double s = 0.0, s2 = 0.0;
                for (std::size_t tau = t - lookback_; tau < t; ++tau) {
                    if (!(panel_->valid(tau, i) && panel_->valid(tau, j))) continue;
                    const double d = lc(tau, i) - lc(tau, j) - shift;
                    s += d;
                    s2 += d * d;
                }
                shift_[k] = shift;
                sum_[k] = s;
                sum_sq_[k] = s2;
            }
        }
        computed_ = false;
    }

    void advance(std::size_t t) {
        const std::size_t n = panel_->num_securities();
        const std::size_t enter = t - 1;
        const std::size_t leave = t - 1 - lookback_;
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_ok_i = panel_->valid(enter, i);
            const bool out_ok_i = panel_->valid(leave, i);
            for (std::size_t j = i + 1; j < n; ++j, ++k) {
                if (in_ok_i && panel_->valid(enter, j)) {
                    const double d = lc(enter, i) - lc(enter, j) - shift_[k];
                    sum_[k] += d;
                    sum_sq_[k] += d * d;
                }
                if (out_ok_i && panel_->valid(leave, j)) {
                    const double d = lc(leave, i) - lc(leave, j) - shift_[k];
                    sum_[k] -= d;
                    sum_sq_[k] -= d * d;
                }
            }
        }
        computed_ = false;
    }

    void evaluate(std::size_t t) {
        const std::size_t n = panel_->num_securities();
        const double count = static_cast<double>(lookback_);
        const bool reduced = convention_ == EstimatorConvention::reduced;
        std::vector<bool> usable(n);
        for (std::size_t i = 0; i < n; ++i) usable[i] = valid_range(i, t - lookback_, t);
        current_ = PreferenceMatrix(n);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j, ++k) {
                if (!usable[i] || !usable[j]) continue;
                const double s = sum_[k];
                const double s2 = sum_sq_[k];
                const double mean_d = s / count;
                double central = s2 - s * mean_d;
                if (!(central > 1e-8 * s2)) central = exact_central(t, i, j);
                const double mean_c = mean_d + shift_[k];
                double ss = central;
                double mu = mean_c;
                if (reduced) {
                    // sum / (T - 1) sits mean_c / (T - 1) above the sample mean
                    const double offset = mean_c / (count - 1.0);
                    mu = mean_c + offset;
                    ss += count * offset * offset;
                }
                const double sigma = std::sqrt(reduced ? ss / (count - 2.0) : ss / (count - 1.0));
                if (sigma < kSigmaEpsilon) continue;
                const double current = lc(t, i) - lc(t, j);
                current_.set_flat(k, (current - mu) / sigma);
            }
        }
    }

    // Two-pass sum of squared deviations from the window mean.
    double exact_central(std::size_t t, std::size_t i, std::size_t j) const {
        double s = 0.0;
        for (std::size_t tau = t - lookback_; tau < t; ++tau) s += lc(tau, i) - lc(tau, j);
        const double mean = s / static_cast<double>(lookback_);
        double ss = 0.0;
        for (std::size_t tau = t - lookback_; tau < t; ++tau) {
            const double d = lc(tau, i) - lc(tau, j) - mean;
            ss += d * d;
        }
        return ss;
    }

    const PricePanel* panel_;
    std::size_t lookback_;
    EstimatorConvention convention_;
    std::vector<double> log_close_;
    std::vector<std::size_t> invalid_prefix_;
    std::vector<double> shift_;
    std::vector<double> sum_;
    std::vector<double> sum_sq_;
    PreferenceMatrix current_;
    bool has_state_ = false;
    bool computed_ = false;
    std::size_t last_t_ = 0;
    std::size_t steps_since_rebuild_ = 0;
};

}  // namespace prefarb
