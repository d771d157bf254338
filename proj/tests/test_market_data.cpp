#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "prefarb/market_data.hpp"

using namespace prefarb;

namespace {

PricePanel parse(const std::string& text) {
    std::istringstream in(text);
    return read_panel(in);
}

}  // namespace

TEST(PanelCsv, ParsesCompletePanel) {
    const auto p = parse(
        "date,ticker,open,close\n"
        "2020-01-02,AAA,10,11\n"
        "2020-01-02,BBB,20,21\n"
        "2020-01-03,AAA,11,12\n"
        "2020-01-03,BBB,21,22\n"
        "2020-01-06,AAA,12,13\n"
        "2020-01-06,BBB,22,23\n");
    ASSERT_EQ(p.num_days(), 3u);
    ASSERT_EQ(p.num_securities(), 2u);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE(p.valid(t, i));
    }
    EXPECT_EQ(p.tickers()[1], "BBB");
    EXPECT_DOUBLE_EQ(p.close(2, 1), 23.0);
    EXPECT_DOUBLE_EQ(p.open(1, 0), 11.0);
}

TEST(PanelCsv, BlankCloseInvalidatesOnlyThatCell) {
    const auto p = parse(
        "date,ticker,open,close\n"
        "2020-01-02,AAA,10,11\n"
        "2020-01-02,BBB,20,\n"
        "2020-01-03,AAA,11,12\n"
        "2020-01-03,BBB,21,22\n");
    EXPECT_FALSE(p.valid(0, 1));
    EXPECT_TRUE(std::isnan(p.close(0, 1)));
    EXPECT_DOUBLE_EQ(p.open(0, 1), 20.0);
    EXPECT_TRUE(p.valid(0, 0));
    EXPECT_TRUE(p.valid(1, 0));
    EXPECT_TRUE(p.valid(1, 1));
}

TEST(PanelCsv, AbsentRowIsMissing) {
    const auto p = parse(
        "date,ticker,open,close\n"
        "2020-01-03,BBB,21,22\n"
        "2020-01-02,AAA,10,11\n"
        "2020-01-03,AAA,11,12\n");
    EXPECT_FALSE(p.valid(0, 1));
    EXPECT_TRUE(p.valid(1, 1));
}

TEST(PanelCsv, NegativePriceIsDomainError) {
    EXPECT_THROW(parse("date,ticker,open,close\n2020-01-02,AAA,10,-5.0\n"), DomainError);
    EXPECT_THROW(parse("date,ticker,open,close\n2020-01-02,AAA,0,1\n"), DomainError);
}

TEST(PanelCsv, MalformedInputIsParseError) {
    EXPECT_THROW(parse("date,ticker,close\n"), ParseError);
    EXPECT_THROW(parse("date,ticker,open,close\n2020-01-02,AAA,10\n"), ParseError);
    EXPECT_THROW(parse("date,ticker,open,close\n2020-13-02,AAA,10,11\n"), ParseError);
    EXPECT_THROW(parse("date,ticker,open,close\n2020-01-02,AAA,ten,11\n"), ParseError);
    EXPECT_THROW(parse("date,ticker,open,close\n2020-01-02,AAA,1,2\n2020-01-02,AAA,1,2\n"),
                 ParseError);
}

TEST(PanelCsv, EmptyInputs) {
    EXPECT_THROW(parse(""), EmptyPanelError);
    EXPECT_THROW(parse("date,ticker,open,close\n"), EmptyPanelError);
}

TEST(PanelCsv, MissingFileRaises) {
    EXPECT_THROW(load_panel("/nonexistent/panel.csv"), ParseError);
}

TEST(PanelCsv, WriteReadRoundTrip) {
    SyntheticMarketSpec spec;
    spec.n_securities = 7;
    spec.n_days = 40;
    spec.n_clusters = 2;
    const auto p = generate_synthetic(spec);
    std::ostringstream out;
    write_panel(p, out);
    EXPECT_EQ(parse(out.str()), p);
}

TEST(PricePanel, RejectsStructuralViolations) {
    const std::vector<Date> two = business_days(Date{std::chrono::year{2020} / 1 / 2}, 2);
    EXPECT_THROW(PricePanel(two, {"A", "A"}, std::vector<double>(4, 1.0),
                            std::vector<double>(4, 1.0)),
                 ParseError);
    EXPECT_THROW(PricePanel({two[1], two[0]}, {"A"}, {1.0, 1.0}, {1.0, 1.0}), ParseError);
    EXPECT_THROW(PricePanel(two, {"A"}, {1.0}, {1.0, 1.0}), LengthError);
}

TEST(PricePanel, DateIndexAndSubset) {
    SyntheticMarketSpec spec;
    spec.n_securities = 5;
    spec.n_days = 10;
    spec.n_clusters = 1;
    const auto p = generate_synthetic(spec);
    EXPECT_EQ(p.date_index(p.dates()[4]), 4u);
    EXPECT_THROW(p.date_index(Date{std::chrono::year{1990} / 1 / 1}), DateRangeError);
    const std::vector<std::size_t> cols{3, 1};
    const auto s = p.subset(cols);
    ASSERT_EQ(s.num_securities(), 2u);
    EXPECT_EQ(s.tickers()[0], p.tickers()[3]);
    EXPECT_EQ(s.close(7, 1), p.close(7, 1));
}

TEST(Dates, ParseFormatRoundTrip) {
    EXPECT_EQ(format_date(parse_date("2019-12-31")), "2019-12-31");
    EXPECT_THROW(parse_date("2019-02-30"), ParseError);
    EXPECT_THROW(parse_date("20190101"), ParseError);
    const auto days = business_days(parse_date("2021-01-01"), 3);  // a Friday
    EXPECT_EQ(format_date(days[0]), "2021-01-01");
    EXPECT_EQ(format_date(days[1]), "2021-01-04");
}

TEST(Synthetic, ZeroNoiseClusterPricesIdentical) {
    SyntheticMarketSpec spec{12, 50, 3, 0.1, 0.0, 0.0, 7};
    const auto p = generate_synthetic(spec);
    for (std::size_t t = 0; t < p.num_days(); ++t) {
        for (std::size_t i = 0; i < p.num_securities(); ++i) {
            const std::size_t first = cluster_of(i, spec.n_clusters);
            EXPECT_EQ(p.close(t, i), p.close(t, first));
            EXPECT_EQ(p.close(t, i), p.close(0, first));
        }
    }
}

TEST(Synthetic, DeterministicGivenSeed) {
    SyntheticMarketSpec spec{10, 300, 2, 0.1, 0.01, 0.01, 99};
    EXPECT_EQ(generate_synthetic(spec), generate_synthetic(spec));
    auto other = spec;
    other.seed = 100;
    EXPECT_FALSE(generate_synthetic(spec) == generate_synthetic(other));
}

namespace {

// Lag-1 autocorrelation of the log spread between securities a and b.
double spread_autocorrelation(const PricePanel& p, std::size_t a, std::size_t b) {
    std::vector<double> s;
    for (std::size_t t = 0; t < p.num_days(); ++t) {
        s.push_back(std::log(p.close(t, a)) - std::log(p.close(t, b)));
    }
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) {
        den += (s[t] - m) * (s[t] - m);
        if (t > 0) num += (s[t] - m) * (s[t - 1] - m);
    }
    return num / den;
}

}  // namespace

TEST(Synthetic, IntraClusterSpreadIsAr1WithReversionRate) {
    SyntheticMarketSpec spec{10, 2000, 2, 0.1, 0.01, 0.01, 5};
    const auto p = generate_synthetic(spec);
    // Securities 0, 2, 4, ... share cluster 0. The difference of two
    // independent AR(1) spreads with the same coefficient is AR(1) too.
    for (std::size_t a : {0u, 1u}) {
        const double rho1 = spread_autocorrelation(p, a, a + 2);
        EXPECT_NEAR(rho1, 0.9, 0.03);
        EXPECT_LT(rho1, 1.0 - spec.spread_reversion / 2.0);
    }
}

TEST(Synthetic, OpensFollowPreviousClose) {
    SyntheticMarketSpec spec{4, 100, 2, 0.1, 0.01, 0.02, 3};
    const auto p = generate_synthetic(spec);
    for (std::size_t t = 1; t < p.num_days(); ++t) {
        for (std::size_t i = 0; i < 4; ++i) {
            const double gap = std::log(p.open(t, i) / p.close(t - 1, i));
            EXPECT_LT(std::abs(gap), 0.25 * 0.02 * 6.0);
        }
    }
}

TEST(Synthetic, SpecValidation) {
    EXPECT_THROW(generate_synthetic({5, 10, 6, 0.1, 0.01, 0.01, 1}), ConfigError);
    EXPECT_THROW(generate_synthetic({5, 10, 2, 0.0, 0.01, 0.01, 1}), ConfigError);
    EXPECT_THROW(generate_synthetic({5, 10, 2, 1.5, 0.01, 0.01, 1}), ConfigError);
    EXPECT_THROW(generate_synthetic({5, 10, 2, 0.1, -0.01, 0.01, 1}), ConfigError);
}

TEST(Synthetic, TickersAreZeroPadded) {
    const auto p = generate_synthetic({12, 5, 2, 0.1, 0.01, 0.01, 1});
    EXPECT_EQ(p.tickers()[0], "S000");
    EXPECT_EQ(p.tickers()[11], "S011");
}
