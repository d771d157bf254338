#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/market_data.hpp"
#include "prefarb/portfolio.hpp"
#include "prefarb/potential_method.hpp"
#include "prefarb/preference_graph.hpp"
#include "prefarb/preference_signal.hpp"
#include "prefarb/random.hpp"
#include "prefarb/statistics.hpp"

namespace prefarb {

/**
 * How a spread z-score maps to preference. rho(i, j) > 0 means the spread
 * log(p_i / p_j) sits above its window mean, i.e. i is rich relative to j.
 * `reversion` prefers the cheap side (long j, short i) and bets on the spread
 * closing; `spread` uses rho as-is and goes long the rich side.
 */
enum class SignalOrientation { reversion, spread };

inline std::string to_string(SignalOrientation o) {
    return o == SignalOrientation::reversion ? "reversion" : "spread";
}

inline SignalOrientation parse_orientation(const std::string& s) {
    if (s == "reversion") return SignalOrientation::reversion;
    if (s == "spread") return SignalOrientation::spread;
    throw ConfigError("unknown signal orientation '" + s + "'");
}

struct BacktestConfig {
    std::size_t lookback = 60;
    double kappa = 3.0;
    std::size_t n_top = 20;
    std::size_t m_bottom = 20;
    double tc_rate = 0.001;
    WeightScheme scheme = WeightScheme::utility_proportional;
    bool momentum = true;
    EstimatorConvention estimator_convention = EstimatorConvention::standard;
    std::uint64_t seed = kDefaultSeed;
    SignalOrientation orientation = SignalOrientation::reversion;

    void validate() const {
        if (lookback < 3) throw ConfigError("lookback must be at least 3");
        if (!(tc_rate >= 0.0)) throw ConfigError("tc_rate must be non-negative");
        if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
    }
};

// Everything the pipeline derives from one day's raw preferences.
struct DailyDecision {
    UtilityVector utilities;
    PreferenceGraph thresholded;
    PreferenceGraph pruned;
    TradeSignalSet signals;
};

// rho -> u*, rho* -> graph -> threshold -> prune -> select, in that order.
// Utilities are oriented: under `reversion` they are solve_utilities(-rho).
inline DailyDecision decide(const PreferenceMatrix& rho, const BacktestConfig& config) {
    DailyDecision out;
    out.utilities = solve_utilities(rho);
    if (config.orientation == SignalOrientation::reversion) {
        for (auto& v : out.utilities.u) v = -v;
    }
    const auto consistent = consistent_preferences(out.utilities);
    const auto graph = build_graph(consistent, out.utilities);
    out.thresholded = threshold_edges(graph, config.kappa);
    out.pruned = prune_intermediate(out.thresholded);
    out.signals = select_vertices(out.pruned, config.n_top, config.m_bottom);
    return out;
}

struct PositionLogEntry {
    std::size_t day = 0;  // execution date index
    std::size_t security = 0;
    Side side = Side::long_side;
    double weight = 0.0;
};

struct BacktestReport {
    std::vector<std::size_t> signal_days;  // date index t of each decision
    std::vector<Date> dates;               // date the return is realized (t + 2)
    std::vector<double> daily_returns;     // net of costs
    std::vector<double> gross_returns;
    std::vector<double> long_returns;   // long leg, as a long-only portfolio
    std::vector<double> short_returns;  // short leg, as a long-only portfolio
    std::vector<double> daily_turnover;
    std::vector<std::size_t> n_long;
    std::vector<std::size_t> n_short;
    std::vector<PositionLogEntry> positions_log;
    std::vector<std::size_t> holding_periods;
    PerformanceSummary summary;

    std::size_t traded_days() const noexcept { return daily_returns.size(); }
    double average_turnover() const { return daily_turnover.empty() ? 0.0 : mean(daily_turnover); }
};

struct DayPnl {
    double gross = 0.0;
    double turnover = 0.0;
    double net = 0.0;
    double long_leg = 0.0;   // sum over w > 0 of w r
    double short_leg = 0.0;  // sum over w < 0 of |w| r
    std::vector<double> drifted;  // weights after the day's returns
};

// One holding period: trade from `previous` (already drifted) to `weights`,
// then earn `returns`. Drift divides by the portfolio growth 1 + gross.
inline DayPnl settle_day(std::span<const double> weights, std::span<const double> previous,
                         std::span<const double> returns, double tc_rate) {
    if (weights.size() != previous.size() || weights.size() != returns.size()) {
        throw LengthError("settle_day inputs differ in length");
    }
    DayPnl out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.turnover += std::abs(weights[i] - previous[i]);
        const double contribution = weights[i] * returns[i];
        out.gross += contribution;
        if (weights[i] > 0.0) {
            out.long_leg += contribution;
        } else if (weights[i] < 0.0) {
            out.short_leg -= contribution;
        }
    }
    out.net = out.gross - tc_rate * out.turnover;
    const double growth = 1.0 + out.gross;
    out.drifted.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.drifted[i] = growth > 0.0 ? weights[i] * (1.0 + returns[i]) / growth : 0.0;
    }
    return out;
}

/**
 * Daily simulation. For every signal day t (closes through t):
 *
 *   rho -> pipeline -> (momentum merge) -> weights w(t)
 *
 * executed at the open of t+1 and held to the open of t+2. The day's net
 * return is sum_i w_i r_i - tc_rate * turnover, with r_i the open-to-open
 * return and turnover = sum_i |w_i(t) - w~_i|, where w~ are the previous
 * weights drifted by their realized returns.
 *
 * A security must be valid at the open of t+1 to be traded; one that is
 * invalid at t+2 exits at its t+1 open (zero return).
 */
inline BacktestReport run_backtest(const PricePanel& panel, const BacktestConfig& config) {
    config.validate();
    const std::size_t days = panel.num_days();
    const std::size_t n = panel.num_securities();
    if (days < config.lookback + 3) {
        throw InsufficientHistoryError("backtest needs at least lookback + 3 days of prices");
    }

    PreferenceStream stream(panel, config.lookback, config.estimator_convention);
    BacktestReport report;
    PositionRegistry registry;
    std::vector<double> drifted(n, 0.0);
    std::vector<double> returns(n, 0.0);
    std::vector<int> run_side(n, 0);
    std::vector<std::size_t> run_length(n, 0);
    std::vector<bool> tradable(n);

    for (std::size_t t = config.lookback; t + 2 < days; ++t) {
        const auto& rho = stream.at(t);
        auto decision = decide(rho, config);
        const auto scoreable = rho.scoreable_securities();
        for (std::size_t i = 0; i < n; ++i) tradable[i] = scoreable[i] && panel.valid(t + 1, i);

        TradeSignalSet signals;
        for (auto i : decision.signals.longs) {
            if (tradable[i]) signals.longs.push_back(i);
        }
        for (auto i : decision.signals.shorts) {
            if (tradable[i]) signals.shorts.push_back(i);
        }
        if (config.momentum) {
            auto [next, merged] =
                momentum_update(registry, decision.utilities, signals, t, tradable);
            registry = std::move(next);
            signals = std::move(merged);
        }
        const auto weights = allocate(signals, decision.utilities, config.scheme);

        for (std::size_t i = 0; i < n; ++i) {
            returns[i] = 0.0;
            if (weights.w[i] != 0.0 && panel.valid(t + 2, i)) {
                returns[i] = panel.open(t + 2, i) / panel.open(t + 1, i) - 1.0;
            }
        }
        auto pnl = settle_day(weights.w, drifted, returns, config.tc_rate);
        drifted = std::move(pnl.drifted);

        std::size_t longs = 0, shorts = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weights.w[i];
            const int side = w > 0.0 ? 1 : (w < 0.0 ? -1 : 0);
            if (side != 0) {
                report.positions_log.push_back(
                    {t + 1, i, side > 0 ? Side::long_side : Side::short_side, w});
                (side > 0 ? longs : shorts) += 1;
            }
            if (side == run_side[i] && side != 0) {
                ++run_length[i];
            } else {
                if (run_side[i] != 0) report.holding_periods.push_back(run_length[i]);
                run_side[i] = side;
                run_length[i] = side != 0 ? 1 : 0;
            }
        }

        report.signal_days.push_back(t);
        report.dates.push_back(panel.dates()[t + 2]);
        report.gross_returns.push_back(pnl.gross);
        report.daily_returns.push_back(pnl.net);
        report.long_returns.push_back(pnl.long_leg);
        report.short_returns.push_back(pnl.short_leg);
        report.daily_turnover.push_back(pnl.turnover);
        report.n_long.push_back(longs);
        report.n_short.push_back(shorts);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (run_side[i] != 0) report.holding_periods.push_back(run_length[i]);
    }
    if (report.daily_returns.size() >= 2) {
        report.summary = summarize(report.daily_returns);
    } else {
        report.summary.t_stat_defined = false;
    }
    return report;
}

}  // namespace prefarb
