#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "prefarb/portfolio.hpp"

using namespace prefarb;

namespace {

TradeSignalSet signals(std::vector<std::size_t> longs, std::vector<std::size_t> shorts) {
    TradeSignalSet s;
    s.longs = std::move(longs);
    s.shorts = std::move(shorts);
    return s;
}

}  // namespace

TEST(Allocate, UtilityProportionalLongLeg) {
    const auto w = allocate(signals({0, 1}, {}), UtilityVector{{2.0, 1.0, -3.0}},
                            WeightScheme::utility_proportional);
    EXPECT_DOUBLE_EQ(w.w[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(w.w[1], 1.0 / 3.0);
    EXPECT_EQ(w.w[2], 0.0);
    EXPECT_EQ(w.short_sum(), 0.0);
}

TEST(Allocate, UtilityProportionalShortLeg) {
    const auto w = allocate(signals({}, {0, 1}), UtilityVector{{-3.0, -1.0}},
                            WeightScheme::utility_proportional);
    EXPECT_DOUBLE_EQ(w.w[0], -0.75);
    EXPECT_DOUBLE_EQ(w.w[1], -0.25);
}

TEST(Allocate, EqualSchemeIsZeroInvestment) {
    std::vector<double> u(9, 1.0);
    const auto w = allocate(signals({0, 1, 2, 3}, {4, 5, 6, 7, 8}), UtilityVector{u},
                            WeightScheme::equal);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(w.w[i], 0.25);
    for (std::size_t i = 4; i < 9; ++i) EXPECT_DOUBLE_EQ(w.w[i], -0.2);
    double net = 0.0;
    for (double x : w.w) net += x;
    EXPECT_NEAR(net, 0.0, 1e-15);
}

TEST(Allocate, ZeroUtilityLegFallsBackToEqual) {
    const auto w = allocate(signals({0, 1}, {2}), UtilityVector{{0.0, 0.0, -1.0}},
                            WeightScheme::utility_proportional);
    EXPECT_TRUE(w.degenerate_leg);
    EXPECT_DOUBLE_EQ(w.w[0], 0.5);
    EXPECT_DOUBLE_EQ(w.w[2], -1.0);
}

TEST(Allocate, Preconditions) {
    EXPECT_THROW(allocate(signals({0}, {0}), UtilityVector{{1.0}}, WeightScheme::equal),
                 ConsistencyError);
    EXPECT_THROW(allocate(signals({3}, {}), UtilityVector{{1.0}}, WeightScheme::equal),
                 SizeError);
    EXPECT_THROW(allocate(signals({0}, {}), UtilityVector{{NAN}}, WeightScheme::equal),
                 DomainError);
}

TEST(Allocate, LegSumsOnRandomSets) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 30;
        UtilityVector u{std::vector<double>(n)};
        for (auto& x : u.u) x = g(rng);
        TradeSignalSet s;
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i] > 0.8) s.longs.push_back(i);
            if (u[i] < -0.8) s.shorts.push_back(i);
        }
        for (auto scheme : {WeightScheme::equal, WeightScheme::utility_proportional}) {
            const auto w = allocate(s, u, scheme);
            if (!s.longs.empty()) {
                EXPECT_NEAR(w.long_sum(), 1.0, 1e-12);
            }
            if (!s.shorts.empty()) {
                EXPECT_NEAR(w.short_sum(), -1.0, 1e-12);
            }
        }
    }
}

TEST(Schemes, ParseAndPrint) {
    EXPECT_EQ(parse_scheme("equal"), WeightScheme::equal);
    EXPECT_EQ(to_string(WeightScheme::utility_proportional), "utility_proportional");
    EXPECT_THROW(parse_scheme("risk_parity"), ConfigError);
}

TEST(Momentum, HeldLongSurvivesWhilePositive) {
    PositionRegistry reg{{0, Position{Side::long_side, 3}}};
    for (double u0 : {0.5, 0.2}) {
        auto [next, merged] = momentum_update(reg, UtilityVector{{u0, -1.0}}, {}, 10);
        EXPECT_EQ(merged.longs, std::vector<std::size_t>{0});
        EXPECT_EQ(next.at(0).entry_day, 3u);
        reg = next;
    }
}

TEST(Momentum, HeldLongExitsOnNegativeOrZero) {
    const PositionRegistry reg{{0, Position{Side::long_side, 0}}};
    for (double u0 : {-0.1, 0.0}) {
        const auto [next, merged] = momentum_update(reg, UtilityVector{{u0, 0.0}}, {}, 1);
        EXPECT_TRUE(merged.longs.empty());
        EXPECT_TRUE(next.empty());
    }
}

TEST(Momentum, HeldShortMirrorsLong) {
    const PositionRegistry reg{{1, Position{Side::short_side, 0}}};
    auto kept = momentum_update(reg, UtilityVector{{0.0, -0.3}}, {}, 1);
    EXPECT_EQ(kept.second.shorts, std::vector<std::size_t>{1});
    auto gone = momentum_update(reg, UtilityVector{{0.0, 0.0}}, {}, 1);
    EXPECT_TRUE(gone.second.shorts.empty());
}

TEST(Momentum, OppositeNewSignalWins) {
    const PositionRegistry reg{{0, Position{Side::long_side, 0}}};
    const auto [next, merged] =
        momentum_update(reg, UtilityVector{{0.2, 1.0}}, signals({1}, {0}), 5);
    EXPECT_TRUE(std::find(merged.longs.begin(), merged.longs.end(), 0u) == merged.longs.end());
    EXPECT_EQ(merged.shorts, std::vector<std::size_t>{0});
    EXPECT_EQ(next.at(0).side, Side::short_side);
    EXPECT_EQ(next.at(0).entry_day, 5u);
}

TEST(Momentum, MergedSetMayExceedSelection) {
    PositionRegistry reg;
    for (std::size_t i = 0; i < 4; ++i) reg[i] = Position{Side::long_side, 0};
    const auto [next, merged] = momentum_update(
        reg, UtilityVector{{1.0, 1.0, 1.0, 1.0, 2.0, -5.0}}, signals({4}, {5}), 1);
    EXPECT_EQ(merged.longs.size(), 5u);
    EXPECT_EQ(next.size(), 6u);
}

TEST(Momentum, UntradableHeldSecurityIsDropped) {
    const PositionRegistry reg{{0, Position{Side::long_side, 0}}, {1, Position{Side::long_side, 0}}};
    const std::vector<bool> tradable{true, false};
    const auto [next, merged] = momentum_update(reg, UtilityVector{{1.0, 1.0}}, {}, 1, tradable);
    EXPECT_EQ(merged.longs, std::vector<std::size_t>{0});
    EXPECT_EQ(next.count(1), 0u);
}

TEST(Momentum, NoFlipMeansNoExit) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> pos(0.01, 2.0);
    PositionRegistry reg{{0, Position{Side::long_side, 0}}, {1, Position{Side::short_side, 0}}};
    for (std::size_t day = 1; day < 100; ++day) {
        auto [next, merged] = momentum_update(reg, UtilityVector{{pos(rng), -pos(rng)}}, {}, day);
        ASSERT_EQ(next.size(), 2u);
        reg = next;
    }
    EXPECT_EQ(reg.at(0).entry_day, 0u);
}

TEST(Momentum, RenormalizedMergedSetKeepsLegSums) {
    const PositionRegistry reg{{0, Position{Side::long_side, 0}}, {3, Position{Side::short_side, 0}}};
    const UtilityVector u{{0.4, 2.0, -0.2, -0.1, -3.0}};
    const auto [next, merged] = momentum_update(reg, u, signals({1}, {4}), 1);
    const auto w = allocate(merged, u, WeightScheme::utility_proportional);
    EXPECT_NEAR(w.long_sum(), 1.0, 1e-12);
    EXPECT_NEAR(w.short_sum(), -1.0, 1e-12);
    for (const auto& [sec, pos] : next) {
        EXPECT_EQ(pos.side == Side::long_side, w.w[sec] > 0.0);
    }
}
