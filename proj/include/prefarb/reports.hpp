#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "prefarb/backtest.hpp"
#include "prefarb/bootstrap.hpp"
#include "prefarb/errors.hpp"
#include "prefarb/market_data.hpp"

namespace prefarb {

inline const char* side_name(Side s) { return s == Side::long_side ? "long" : "short"; }

// daily.csv: one row per traded day, dated at the close of the holding period.
inline void write_daily_csv(const BacktestReport& r, const PricePanel& panel, std::ostream& out) {
    using detail::format_double;
    out << "date,signal_date,gross_return,net_return,long_return,short_return,turnover,"
           "n_long,n_short\n";
    for (std::size_t d = 0; d < r.traded_days(); ++d) {
        out << format_date(r.dates[d]) << ',' << format_date(panel.dates()[r.signal_days[d]])
            << ',' << format_double(r.gross_returns[d]) << ','
            << format_double(r.daily_returns[d]) << ',' << format_double(r.long_returns[d])
            << ',' << format_double(r.short_returns[d]) << ','
            << format_double(r.daily_turnover[d]) << ',' << r.n_long[d] << ',' << r.n_short[d]
            << '\n';
    }
}

inline void write_positions_csv(const BacktestReport& r, const PricePanel& panel,
                                std::ostream& out) {
    out << "date,ticker,side,weight\n";
    for (const auto& p : r.positions_log) {
        out << format_date(panel.dates()[p.day]) << ',' << panel.tickers()[p.security] << ','
            << side_name(p.side) << ',' << detail::format_double(p.weight) << '\n';
    }
}

inline std::map<std::size_t, std::size_t> holding_histogram(const BacktestReport& r) {
    std::map<std::size_t, std::size_t> hist;
    for (auto h : r.holding_periods) ++hist[h];
    return hist;
}

inline void write_holding_hist_csv(const BacktestReport& r, std::ostream& out) {
    out << "holding_days,count\n";
    for (const auto& [days, count] : holding_histogram(r)) out << days << ',' << count << '\n';
}

inline void write_bootstrap_samples_csv(const BootstrapSummary& s,
                                        const std::vector<std::string>& tickers,
                                        std::ostream& out) {
    using detail::format_double;
    out << "sample,ann_mean,ann_std,t_stat,average_turnover,tickers\n";
    for (std::size_t b = 0; b < s.samples.size(); ++b) {
        const auto& x = s.samples[b];
        out << b << ',' << format_double(x.summary.ann_mean) << ','
            << format_double(x.summary.ann_std) << ',' << format_double(x.summary.t_stat) << ','
            << format_double(x.average_turnover) << ',';
        for (std::size_t k = 0; k < x.columns.size(); ++k) {
            out << (k ? ";" : "") << tickers.at(x.columns[k]);
        }
        out << '\n';
    }
}

// A dated table of numeric columns, e.g. factor returns or daily.csv.
struct DatedTable {
    std::vector<Date> dates;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // rows[t][c]

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ParseError("column '" + name + "' not found");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

// Header `date,<name>,...`. Columns that do not parse as numbers are kept as NaN.
inline DatedTable read_dated_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyPanelError("table is empty");
    const auto header = detail::split(detail::trim(line));
    if (header.size() < 2 || detail::trim(header[0]) != "date") {
        throw ParseError("table header must start with 'date'");
    }
    DatedTable table;
    for (std::size_t c = 1; c < header.size(); ++c) {
        table.columns.emplace_back(detail::trim(header[c]));
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto fields = detail::split(trimmed);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        const Date date = parse_date(detail::trim(fields[0]));
        if (!table.dates.empty() && !(table.dates.back() < date)) {
            throw ParseError("line " + std::to_string(line_no) + ": dates must increase");
        }
        std::vector<double> row(table.columns.size(), kMissing);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (detail::parse_double(detail::trim(fields[c]), v)) row[c - 1] = v;
        }
        table.dates.push_back(date);
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw EmptyPanelError("table has no data rows");
    return table;
}

inline DatedTable load_dated_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open table '" + path + "'");
    return read_dated_table(in);
}

}  // namespace prefarb
