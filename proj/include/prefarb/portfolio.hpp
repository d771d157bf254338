#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/potential_method.hpp"
#include "prefarb/preference_graph.hpp"

namespace prefarb {

enum class WeightScheme { equal, utility_proportional };

inline std::string to_string(WeightScheme s) {
    return s == WeightScheme::equal ? "equal" : "utility_proportional";
}

inline WeightScheme parse_scheme(const std::string& s) {
    if (s == "equal") return WeightScheme::equal;
    if (s == "utility_proportional") return WeightScheme::utility_proportional;
    throw ConfigError("unknown weight scheme '" + s + "'");
}

struct PortfolioWeights {
    std::vector<double> w;
    // A utility-proportional leg had zero total |u| and was equal-weighted.
    bool degenerate_leg = false;

    double long_sum() const {
        double s = 0.0;
        for (double v : w) {
            if (v > 0.0) s += v;
        }
        return s;
    }
    double short_sum() const {
        double s = 0.0;
        for (double v : w) {
            if (v < 0.0) s += v;
        }
        return s;
    }
};

namespace detail {

// Assigns sign * share to each leg member; shares sum to one.
inline bool fill_leg(std::span<const std::size_t> leg, const UtilityVector& u,
                     WeightScheme scheme, double sign, std::vector<double>& w) {
    if (leg.empty()) return false;
    double total = 0.0;
    if (scheme == WeightScheme::utility_proportional) {
        for (auto i : leg) total += std::abs(u[i]);
    }
    const bool fallback = scheme == WeightScheme::utility_proportional && !(total > 0.0);
    for (auto i : leg) {
        const double share = scheme == WeightScheme::equal || fallback
                                 ? 1.0 / static_cast<double>(leg.size())
                                 : std::abs(u[i]) / total;
        w[i] = sign * share;
    }
    return fallback;
}

}  // namespace detail

/**
 * Leg-normalized weights. Utility-proportional: w = |u| / sum_leg |u| on the
 * long leg and the negative of that on the short leg; equal: 1/|leg|. With
 * both legs populated the result is a zero-investment portfolio.
 */
inline PortfolioWeights allocate(const TradeSignalSet& signals, const UtilityVector& utilities,
                                 WeightScheme scheme) {
    const std::size_t n = utilities.size();
    for (auto i : signals.longs) {
        if (i >= n) throw SizeError("signal index out of range");
        if (std::binary_search(signals.shorts.begin(), signals.shorts.end(), i)) {
            throw ConsistencyError("security " + std::to_string(i) + " is in both legs");
        }
    }
    for (auto i : signals.shorts) {
        if (i >= n) throw SizeError("signal index out of range");
    }
    for (double v : utilities.u) {
        if (!std::isfinite(v)) throw DomainError("utilities must be finite");
    }
    PortfolioWeights out{std::vector<double>(n, 0.0)};
    const bool long_fallback = detail::fill_leg(signals.longs, utilities, scheme, 1.0, out.w);
    const bool short_fallback = detail::fill_leg(signals.shorts, utilities, scheme, -1.0, out.w);
    out.degenerate_leg = long_fallback || short_fallback;
    return out;
}

enum class Side { long_side, short_side };

struct Position {
    Side side = Side::long_side;
    std::size_t entry_day = 0;  // date index of entry

    friend bool operator==(const Position&, const Position&) = default;
};

// Open positions carried by the momentum decorator, keyed by security.
using PositionRegistry = std::map<std::size_t, Position>;

/**
 * Momentum decorator. A held long survives while its utility stays > 0, a held
 * short while it stays < 0; survivors are merged into the new signals. A
 * security newly signalled on the opposite side switches to that side. Held
 * securities with tradable[i] == false are dropped. Returns the new registry
 * and the merged signal set, whose legs may exceed n_top and m_bottom.
 */
inline std::pair<PositionRegistry, TradeSignalSet> momentum_update(
    const PositionRegistry& registry, const UtilityVector& utilities,
    const TradeSignalSet& new_signals, std::size_t day = 0,
    const std::vector<bool>& tradable = {}) {
    auto can_trade = [&](std::size_t i) { return tradable.empty() || tradable[i]; };
    auto in = [](const std::vector<std::size_t>& v, std::size_t i) {
        return std::binary_search(v.begin(), v.end(), i);
    };

    TradeSignalSet merged = new_signals;
    for (const auto& [security, pos] : registry) {
        if (security >= utilities.size() || !can_trade(security)) continue;
        const double u = utilities[security];
        if (pos.side == Side::long_side) {
            if (u > 0.0 && !in(new_signals.shorts, security)) merged.longs.push_back(security);
        } else {
            if (u < 0.0 && !in(new_signals.longs, security)) merged.shorts.push_back(security);
        }
    }
    for (auto* leg : {&merged.longs, &merged.shorts}) {
        std::sort(leg->begin(), leg->end());
        leg->erase(std::unique(leg->begin(), leg->end()), leg->end());
    }

    PositionRegistry next;
    auto enter = [&](std::size_t i, Side side) {
        const auto it = registry.find(i);
        const bool continuing = it != registry.end() && it->second.side == side;
        next.emplace(i, Position{side, continuing ? it->second.entry_day : day});
    };
    for (auto i : merged.longs) enter(i, Side::long_side);
    for (auto i : merged.shorts) enter(i, Side::short_side);
    return {std::move(next), std::move(merged)};
}

}  // namespace prefarb
