#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "prefarb/backtest.hpp"
#include "prefarb/errors.hpp"
#include "prefarb/market_data.hpp"
#include "prefarb/parallel.hpp"
#include "prefarb/random.hpp"
#include "prefarb/statistics.hpp"

namespace prefarb {

struct StatInterval {
    double median = 0.0;
    double lower = 0.0;  // 2.5% nearest-rank percentile
    double upper = 0.0;  // 97.5% nearest-rank percentile
};

inline StatInterval interval_of(const std::vector<double>& values) {
    return {percentile_nearest_rank(values, 0.5), percentile_nearest_rank(values, 0.025),
            percentile_nearest_rank(values, 0.975)};
}

struct BootstrapSample {
    std::vector<std::size_t> columns;  // ascending security indices
    PerformanceSummary summary;
    double average_turnover = 0.0;
};

struct BootstrapSummary {
    std::size_t subset_size = 0;
    std::size_t n_samples = 0;
    StatInterval ann_mean;
    StatInterval ann_std;
    StatInterval t_stat;
    std::vector<BootstrapSample> samples;
};

// `size` distinct columns out of `universe`, drawn by partial Fisher-Yates.
inline std::vector<std::size_t> draw_subset(Rng& rng, std::size_t universe, std::size_t size) {
    if (size > universe) throw SizeError("subset larger than the universe");
    std::vector<std::size_t> pool(universe);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < size; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, universe - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(size);
    std::sort(pool.begin(), pool.end());
    return pool;
}

/**
 * Security bootstrap: B backtests on random fixed-size subsets of the
 * universe (subsets may overlap). Sample b draws its subset from the stream
 * (config.seed, b), so results do not depend on the thread count.
 */
inline BootstrapSummary bootstrap_study(const PricePanel& panel, const BacktestConfig& config,
                                        std::size_t subset_size, std::size_t n_samples,
                                        unsigned threads = 1) {
    config.validate();
    if (subset_size < 2 || subset_size > panel.num_securities()) {
        throw SizeError("subset size must be in [2, number of securities]");
    }
    if (n_samples < 1) throw SizeError("bootstrap needs at least one sample");

    BootstrapSummary out;
    out.subset_size = subset_size;
    out.n_samples = n_samples;
    out.samples.resize(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t b) {
        auto rng = make_stream(config.seed, b);
        auto columns = draw_subset(rng, panel.num_securities(), subset_size);
        const auto report = run_backtest(panel.subset(columns), config);
        out.samples[b] = {std::move(columns), report.summary, report.average_turnover()};
    });

    std::vector<double> means, stds, ts;
    for (const auto& s : out.samples) {
        means.push_back(s.summary.ann_mean);
        stds.push_back(s.summary.ann_std);
        ts.push_back(s.summary.t_stat);
    }
    out.ann_mean = interval_of(means);
    out.ann_std = interval_of(stds);
    out.t_stat = interval_of(ts);
    return out;
}

}  // namespace prefarb
