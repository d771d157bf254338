#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "prefarb/errors.hpp"
#include "prefarb/random.hpp"

namespace prefarb {

using Date = std::chrono::sys_days;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

inline Date parse_date(std::string_view text) {
    text = detail::trim(text);
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::string_view part, auto& value) {
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        return ec == std::errc{} && ptr == part.data() + part.size();
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        !field(text.substr(0, 4), y) || !field(text.substr(5, 2), m) ||
        !field(text.substr(8, 2), d)) {
        throw ParseError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

inline std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/**
 * Date-indexed open/close price matrix with a validity mask.
 *
 * Prices are stored row-major [T x N]. Missing prices are NaN; an entry is
 * valid when both its open and close are observed. Immutable after
 * construction, so a panel can be shared read-only across threads.
 */
class PricePanel {
public:
    PricePanel() = default;

    PricePanel(std::vector<Date> dates, std::vector<std::string> tickers,
               std::vector<double> open, std::vector<double> close)
        : dates_(std::move(dates)),
          tickers_(std::move(tickers)),
          open_(std::move(open)),
          close_(std::move(close)) {
        const std::size_t cells = dates_.size() * tickers_.size();
        if (open_.size() != cells || close_.size() != cells) {
            throw LengthError("price matrices must be [T x N]");
        }
        for (std::size_t t = 1; t < dates_.size(); ++t) {
            if (!(dates_[t - 1] < dates_[t])) throw ParseError("dates must be strictly increasing");
        }
        std::set<std::string> seen;
        for (const auto& ticker : tickers_) {
            if (!seen.insert(ticker).second) throw ParseError("duplicate ticker '" + ticker + "'");
        }
        valid_.assign(cells, 0);
        for (std::size_t k = 0; k < cells; ++k) {
            const bool has_open = !std::isnan(open_[k]);
            const bool has_close = !std::isnan(close_[k]);
            if ((has_open && !(open_[k] > 0.0 && std::isfinite(open_[k]))) ||
                (has_close && !(close_[k] > 0.0 && std::isfinite(close_[k])))) {
                throw DomainError("prices must be positive and finite (ticker '" +
                                  tickers_[k % tickers_.size()] + "', date " +
                                  format_date(dates_[k / tickers_.size()]) + ")");
            }
            valid_[k] = has_open && has_close;
        }
    }

    std::size_t num_days() const noexcept { return dates_.size(); }
    std::size_t num_securities() const noexcept { return tickers_.size(); }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& tickers() const noexcept { return tickers_; }

    double open(std::size_t t, std::size_t i) const { return open_[t * num_securities() + i]; }
    double close(std::size_t t, std::size_t i) const { return close_[t * num_securities() + i]; }
    bool valid(std::size_t t, std::size_t i) const { return valid_[t * num_securities() + i] != 0; }

    // Index of `date` in the calendar, or DateRangeError if it is not a trading day.
    std::size_t date_index(Date date) const {
        const auto it = std::lower_bound(dates_.begin(), dates_.end(), date);
        if (it == dates_.end() || *it != date) {
            throw DateRangeError("date " + format_date(date) + " is not in the panel");
        }
        return static_cast<std::size_t>(it - dates_.begin());
    }

    // Panel restricted to the given security columns, in the given order.
    PricePanel subset(std::span<const std::size_t> columns) const {
        std::vector<std::string> tickers;
        tickers.reserve(columns.size());
        for (auto c : columns) {
            if (c >= num_securities()) throw SizeError("subset column out of range");
            tickers.push_back(tickers_[c]);
        }
        std::vector<double> open(num_days() * columns.size());
        std::vector<double> close(open.size());
        for (std::size_t t = 0; t < num_days(); ++t) {
            for (std::size_t k = 0; k < columns.size(); ++k) {
                open[t * columns.size() + k] = this->open(t, columns[k]);
                close[t * columns.size() + k] = this->close(t, columns[k]);
            }
        }
        return PricePanel(dates_, std::move(tickers), std::move(open), std::move(close));
    }

    // Copy with one close price replaced. Intended for mutation testing.
    PricePanel with_close(std::size_t t, std::size_t i, double value) const {
        auto close = close_;
        close[t * num_securities() + i] = value;
        return PricePanel(dates_, tickers_, open_, std::move(close));
    }

    PricePanel with_open(std::size_t t, std::size_t i, double value) const {
        auto open = open_;
        open[t * num_securities() + i] = value;
        return PricePanel(dates_, tickers_, std::move(open), close_);
    }

    friend bool operator==(const PricePanel& a, const PricePanel& b) {
        auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
            if (x.size() != y.size()) return false;
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (std::isnan(x[k]) != std::isnan(y[k])) return false;
                if (!std::isnan(x[k]) && x[k] != y[k]) return false;
            }
            return true;
        };
        return a.dates_ == b.dates_ && a.tickers_ == b.tickers_ && same(a.open_, b.open_) &&
               same(a.close_, b.close_);
    }

private:
    std::vector<Date> dates_;
    std::vector<std::string> tickers_;
    std::vector<double> open_;
    std::vector<double> close_;
    std::vector<unsigned char> valid_;
};

// Panel CSV: header `date,ticker,open,close`, one row per (date, ticker),
// blank cell = missing. Rows may come in any order.
inline PricePanel read_panel(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyPanelError("panel CSV is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    {
        const auto header = detail::split(detail::trim(line));
        if (header.size() != 4 || detail::trim(header[0]) != "date" ||
            detail::trim(header[1]) != "ticker" || detail::trim(header[2]) != "open" ||
            detail::trim(header[3]) != "close") {
            throw ParseError("panel CSV header must be 'date,ticker,open,close'");
        }
    }
    struct Cell {
        double open = kMissing;
        double close = kMissing;
    };
    std::map<std::pair<Date, std::string>, Cell> cells;
    std::set<Date> dates;
    std::set<std::string> tickers;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto fields = detail::split(trimmed);
        if (fields.size() != 4) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const Date date = [&] {
            try {
                return parse_date(fields[0]);
            } catch (const ParseError& e) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }();
        const std::string ticker(detail::trim(fields[1]));
        if (ticker.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty ticker");
        Cell cell;
        for (int k = 0; k < 2; ++k) {
            const auto text = detail::trim(fields[2 + k]);
            if (text.empty()) continue;
            double value = 0.0;
            if (!detail::parse_double(text, value)) {
                throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                                 std::string(text) + "'");
            }
            if (!(value > 0.0) || !std::isfinite(value)) {
                throw DomainError("line " + std::to_string(line_no) + ": non-positive price " +
                                  std::string(text));
            }
            (k == 0 ? cell.open : cell.close) = value;
        }
        if (!cells.emplace(std::pair{date, ticker}, cell).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate row for " + ticker +
                             " on " + format_date(date));
        }
        dates.insert(date);
        tickers.insert(ticker);
    }
    if (cells.empty()) throw EmptyPanelError("panel CSV has no data rows");

    std::vector<Date> date_vec(dates.begin(), dates.end());
    std::vector<std::string> ticker_vec(tickers.begin(), tickers.end());
    std::vector<double> open(date_vec.size() * ticker_vec.size(), kMissing);
    std::vector<double> close(open.size(), kMissing);
    for (const auto& [key, cell] : cells) {
        const auto t = static_cast<std::size_t>(
            std::lower_bound(date_vec.begin(), date_vec.end(), key.first) - date_vec.begin());
        const auto i = static_cast<std::size_t>(
            std::lower_bound(ticker_vec.begin(), ticker_vec.end(), key.second) -
            ticker_vec.begin());
        open[t * ticker_vec.size() + i] = cell.open;
        close[t * ticker_vec.size() + i] = cell.close;
    }
    return PricePanel(std::move(date_vec), std::move(ticker_vec), std::move(open),
                      std::move(close));
}

inline PricePanel load_panel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open panel file '" + path + "'");
    return read_panel(in);
}

// Rows sorted by (date, ticker); cells where both prices are missing are omitted.
inline void write_panel(const PricePanel& panel, std::ostream& out) {
    out << "date,ticker,open,close\n";
    std::vector<std::size_t> order(panel.num_securities());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return panel.tickers()[a] < panel.tickers()[b];
    });
    auto cell = [](double v) { return std::isnan(v) ? std::string{} : detail::format_double(v); };
    for (std::size_t t = 0; t < panel.num_days(); ++t) {
        const auto date = format_date(panel.dates()[t]);
        for (const auto i : order) {
            const double o = panel.open(t, i);
            const double c = panel.close(t, i);
            if (std::isnan(o) && std::isnan(c)) continue;
            out << date << ',' << panel.tickers()[i] << ',' << cell(o) << ',' << cell(c) << '\n';
        }
    }
}

inline void save_panel(const PricePanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write panel file '" + path + "'");
    write_panel(panel, out);
}

struct SyntheticMarketSpec {
    std::size_t n_securities = 60;
    std::size_t n_days = 2000;
    std::size_t n_clusters = 6;
    double spread_reversion = 0.1;
    double spread_vol = 0.01;
    double market_vol = 0.01;
    std::uint64_t seed = kDefaultSeed;

    void validate() const {
        if (n_securities == 0 || n_days == 0) throw ConfigError("synthetic market must be non-empty");
        if (n_clusters == 0 || n_clusters > n_securities) {
            throw ConfigError("n_clusters must be in [1, n_securities]");
        }
        if (!(spread_reversion > 0.0 && spread_reversion <= 1.0)) {
            throw ConfigError("spread_reversion must be in (0, 1]");
        }
        if (!(spread_vol >= 0.0) || !(market_vol >= 0.0)) {
            throw ConfigError("volatilities must be non-negative");
        }
    }
};

// Securities are assigned to clusters round-robin.
constexpr std::size_t cluster_of(std::size_t security, std::size_t n_clusters) noexcept {
    return security % n_clusters;
}

// Consecutive weekdays starting at `first` (which is itself moved forward to a weekday).
inline std::vector<Date> business_days(Date first, std::size_t count) {
    using std::chrono::Saturday;
    using std::chrono::Sunday;
    using std::chrono::weekday;
    std::vector<Date> out;
    out.reserve(count);
    Date d = first;
    while (out.size() < count) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) out.push_back(d);
        d += std::chrono::days{1};
    }
    return out;
}

/**
 * Cointegrated synthetic universe. Log close of security i in cluster c:
 *
 *   log p_i(t) = log 100 + W_c(t) + X_i(t)
 *
 * where W_c is a Gaussian random walk (step sd market_vol) shared by the
 * cluster and X_i is an AR(1) spread with coefficient 1 - spread_reversion and
 * innovation sd spread_vol, started from its stationary law. The open is the
 * previous close times exp(0.25 * market_vol * z), one overnight step.
 */
inline PricePanel generate_synthetic(const SyntheticMarketSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_securities;
    const std::size_t days = spec.n_days;
    const double phi = 1.0 - spec.spread_reversion;
    const double stationary_sd =
        phi < 1.0 ? spec.spread_vol / std::sqrt(1.0 - phi * phi) : spec.spread_vol;

    Rng rng(stream_seed(spec.seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> walk(spec.n_clusters, 0.0);
    std::vector<double> spread(n);
    for (auto& x : spread) x = stationary_sd * gauss(rng);

    std::vector<double> open(days * n);
    std::vector<double> close(days * n);
    for (std::size_t t = 0; t < days; ++t) {
        if (t > 0) {
            for (auto& w : walk) w += spec.market_vol * gauss(rng);
            for (auto& x : spread) x = phi * x + spec.spread_vol * gauss(rng);
        }
        for (std::size_t i = 0; i < n; ++i) {
            close[t * n + i] = 100.0 * std::exp(walk[cluster_of(i, spec.n_clusters)] + spread[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double prev = t > 0 ? close[(t - 1) * n + i] : close[i];
            open[t * n + i] = prev * std::exp(0.25 * spec.market_vol * gauss(rng));
        }
    }

    const std::size_t width = std::max<std::size_t>(3, std::to_string(n - 1).size());
    std::vector<std::string> tickers(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto digits = std::to_string(i);
        tickers[i] = "S" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
    }
    const Date start{std::chrono::year{2000} / std::chrono::January / 3};
    return PricePanel(business_days(start, days), std::move(tickers), std::move(open),
                      std::move(close));
}

}  // namespace prefarb
