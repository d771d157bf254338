#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "prefarb/estimator_lab.hpp"

using namespace prefarb;

TEST(Theory, UncorrelatedValues) {
    EXPECT_DOUBLE_EQ(uncorrelated_var_u(100, 1.0), 0.0099);
    EXPECT_DOUBLE_EQ(uncorrelated_var_rho(100, 1.0), 0.0198);
    EXPECT_DOUBLE_EQ(antisymmetric_var_rho(100, 1.0), 0.02);
    EXPECT_DOUBLE_EQ(theoretical_mean_var_u(100, 1.0, 0.0), 0.0099);
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_DOUBLE_EQ(theoretical_var_u(i, 100, 1.0, 0.0), 0.0099);
    }
}

TEST(Theory, FloorIsMeanOfCovarianceTerm) {
    for (std::size_t n : {3u, 10u, 101u}) {
        double avg = 0.0;
        for (std::size_t i = 0; i < n; ++i) avg += theoretical_var_u(i, n, 1.0, 0.4);
        avg /= static_cast<double>(n);
        EXPECT_NEAR(avg, theoretical_mean_var_u(n, 1.0, 0.4), 1e-14);
    }
    EXPECT_NEAR(covariance_floor(100000, 0.6), 0.2, 1e-9);
}

TEST(NoiseModel, Validation) {
    NoiseModel m;
    m.cov = 1.5;
    EXPECT_THROW(m.validate(), ConfigError);
    m.cov = -0.1;
    EXPECT_THROW(m.validate(), ConfigError);
    m = {};
    m.sigma2 = 0.0;
    EXPECT_THROW(m.validate(), ConfigError);
    m = {};
    m.n_trials = 0;
    EXPECT_THROW(m.validate(), ConfigError);
}

TEST(Simulate, RequiresZeroSumTruth) {
    NoiseModel m{1.0, 0.0, 3, 10, 1};
    EXPECT_THROW(simulate_estimator(UtilityVector{{1.0, 1.0, 1.0}}, m), DomainError);
    EXPECT_THROW(simulate_estimator(UtilityVector{{1.0, -1.0}}, m), SizeError);
}

TEST(Simulate, NoiselessLimitRecoversTruth) {
    const auto u = random_utilities(12, 5);
    NoiseModel m{1e-24, 0.0, 12, 50, 2};
    const auto s = simulate_estimator(u, m);
    for (double b : s.bias_u) EXPECT_LT(std::abs(b), 1e-9);
    for (double b : s.bias_rho) EXPECT_LT(std::abs(b), 1e-9);
}

TEST(Simulate, ZeroTruthMeanNearZero) {
    const UtilityVector zero{std::vector<double>(20, 0.0)};
    NoiseModel m{1.0, 0.0, 20, 20000, 3};
    const auto s = simulate_estimator(zero, m);
    const double se = std::sqrt(uncorrelated_var_u(20, 1.0) / 20000.0);
    for (double b : s.bias_u) EXPECT_LT(std::abs(b), 5.0 * se);
}

TEST(Simulate, VarianceMatchesTheorySmallN) {
    const auto u = random_utilities(20, 6);
    NoiseModel m{2.0, 0.0, 20, 40000, 4};
    const auto s = simulate_estimator(u, m);
    EXPECT_NEAR(s.mean_var_u, uncorrelated_var_u(20, 2.0), 0.03 * uncorrelated_var_u(20, 2.0));
    EXPECT_NEAR(s.mean_var_rho, antisymmetric_var_rho(20, 2.0),
                0.03 * antisymmetric_var_rho(20, 2.0));
    EXPECT_LT(s.max_standardized_bias_u, 4.0);
    EXPECT_LT(s.max_standardized_bias_rho, 5.0);
}

TEST(Simulate, CorrelatedPerSecurityVariance) {
    const std::size_t n = 9;
    const auto u = random_utilities(n, 7);
    NoiseModel m{1.0, 0.5, n, 60000, 5};
    const auto s = simulate_estimator(u, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double theory = theoretical_var_u(i, n, 1.0, 0.5);
        EXPECT_NEAR(s.var_u[i], theory, 0.04 * theory + 1e-3);
    }
}

TEST(Simulate, ConsistencyRatio) {
    const std::size_t n = 25;
    const auto a = simulate_estimator(random_utilities(n, 8), {1.0, 0.0, n, 20000, 9},
                                      {1, false});
    const auto b = simulate_estimator(random_utilities(2 * n, 8), {1.0, 0.0, 2 * n, 20000, 9},
                                      {1, false});
    const double expected = uncorrelated_var_u(n, 1.0) / uncorrelated_var_u(2 * n, 1.0);
    EXPECT_NEAR(a.mean_var_u / b.mean_var_u, expected, 0.1 * expected);
}

TEST(Simulate, ThreadCountInvariant) {
    const auto u = random_utilities(15, 10);
    NoiseModel m{1.0, 0.2, 15, 3000, 11};
    const auto one = simulate_estimator(u, m, {1, true});
    const auto many = simulate_estimator(u, m, {5, true});
    EXPECT_EQ(one.var_u, many.var_u);
    EXPECT_EQ(one.bias_rho, many.bias_rho);
}

TEST(BiasTest, BelowFourAtZeroCovariance) {
    const auto u = random_utilities(30, 12);
    EXPECT_LT(bias_test(u, {1.0, 0.0, 30, 20000, 13}), 4.0);
}

TEST(RandomUtilities, CentredAndDeterministic) {
    const auto u = random_utilities(40, 3);
    EXPECT_NEAR(u.sum(), 0.0, 1e-12);
    EXPECT_EQ(u.u, random_utilities(40, 3).u);
}

TEST(VarianceStudy, PlateauWithCovariance) {
    const auto small = variance_study_point(10, 0.5, 1.0, 4000, 1);
    const auto large = variance_study_point(80, 0.5, 1.0, 4000, 1);
    EXPECT_GT(large.empirical_var, 0.4 * covariance_floor(80, 0.5));
    EXPECT_NEAR(large.empirical_var, large.theoretical_var, 0.1 * large.theoretical_var);
    EXPECT_NEAR(small.empirical_var, small.theoretical_var, 0.1 * small.theoretical_var);
}
