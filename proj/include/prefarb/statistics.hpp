#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "prefarb/errors.hpp"

namespace prefarb {

inline constexpr double kTradingDaysPerYear = 252.0;

struct PerformanceSummary {
    double ann_mean = 0.0;
    double ann_std = 0.0;
    double t_stat = 0.0;
    // False when the daily standard deviation is zero; t_stat is then reported as 0.
    bool t_stat_defined = true;
};

inline double mean(std::span<const double> x) {
    if (x.empty()) throw LengthError("mean of an empty series");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Sample standard deviation (divisor n - 1).
inline double sample_std(std::span<const double> x) {
    if (x.size() < 2) throw LengthError("standard deviation needs at least 2 observations");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Annualized mean (x252), annualized sample std (x sqrt 252), and the daily t-statistic.
inline PerformanceSummary summarize(std::span<const double> daily_returns) {
    if (daily_returns.size() < 2) throw LengthError("summarize needs at least 2 daily returns");
    const double m = mean(daily_returns);
    const double s = sample_std(daily_returns);
    PerformanceSummary out;
    out.ann_mean = kTradingDaysPerYear * m;
    out.ann_std = std::sqrt(kTradingDaysPerYear) * s;
    if (s > 0.0) {
        out.t_stat = m / (s / std::sqrt(static_cast<double>(daily_returns.size())));
    } else {
        out.t_stat = 0.0;
        out.t_stat_defined = false;
    }
    return out;
}

// Nearest-rank percentile, p in [0, 1].
inline double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw LengthError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(p * static_cast<double>(values.size()));
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, double(values.size()))) - 1;
    return values[idx];
}

inline double median(std::vector<double> values) {
    return percentile_nearest_rank(std::move(values), 0.5);
}

}  // namespace prefarb
