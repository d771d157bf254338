// prefarb command-line driver: rank, backtest, bootstrap, simulate,
// validate-estimator, regress.
//
// Exit codes: 0 success, 1 usage error, 2 data or configuration error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prefarb/prefarb.hpp"
#include "prefarb/reports.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace prefarb;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Values as given on the command line; unset means "take from --config or default".
struct Flags {
    std::string config_path;
    std::string data;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;

    std::optional<std::size_t> lookback, n_top, m_bottom;
    std::optional<double> kappa, tc_rate;
    std::optional<std::string> scheme, estimator, orientation;
    std::optional<bool> momentum;

    // command parameters
    std::optional<std::string> date;
    std::optional<std::size_t> subset_size, samples;
    std::optional<std::size_t> n_securities, n_days, n_clusters;
    std::optional<double> spread_reversion, spread_vol, market_vol;
    std::vector<std::size_t> n_list;
    std::vector<double> cov_list;
    std::optional<double> sigma2;
    std::optional<std::size_t> trials;
    std::optional<std::string> returns, factors, column;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_data) {
    cmd->add_option("--config", f.config_path, "JSON config or a saved manifest.json");
    auto* data = cmd->add_option("--data", f.data, "input CSV");
    if (!needs_data) data->description("unused by this command");
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", f.seed, "master RNG seed");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1u, 1024u));
}

void add_backtest_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--lookback", f.lookback, "spread window length in days");
    cmd->add_option("--kappa", f.kappa, "edge threshold");
    cmd->add_option("--n-top", f.n_top, "long candidates kept");
    cmd->add_option("--m-bottom", f.m_bottom, "short candidates kept");
    cmd->add_option("--tc-rate", f.tc_rate, "cost per unit turnover");
    cmd->add_option("--scheme", f.scheme, "equal | utility_proportional");
    cmd->add_option("--momentum", f.momentum, "hold positions until utility changes sign");
    cmd->add_option("--estimator", f.estimator, "standard | reduced window estimator");
    cmd->add_option("--orientation", f.orientation, "reversion | spread");
}

// Flat key/value view of a config file. A manifest nests keys under
// "config" and "params"; both are flattened.
json flatten_config(const json& file) {
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    json flat = json::object();
    for (const auto& [k, v] : file.items()) {
        if ((k == "config" || k == "params") && v.is_object()) {
            for (const auto& [k2, v2] : v.items()) flat[k2] = v2;
        } else {
            flat[k] = v;
        }
    }
    return flat;
}

class Settings {
public:
    Settings(const Flags& flags, const std::string& command) : flags_(flags) {
        if (!flags.config_path.empty()) {
            std::ifstream in(flags.config_path);
            if (!in) throw ConfigError("cannot open config '" + flags.config_path + "'");
            try {
                file_ = flatten_config(json::parse(in));
            } catch (const json::exception& e) {
                throw ConfigError(std::string("bad config JSON: ") + e.what());
            }
            if (file_.contains("command") && file_["command"] != command) {
                throw ConfigError("manifest is for command '" +
                                  file_["command"].get<std::string>() + "'");
            }
        }
    }

    template <class T>
    T get(const std::optional<T>& flag, const char* key, T fallback) {
        used_.push_back(key);
        if (flag) return *flag;
        if (file_.contains(key)) {
            try {
                return file_.at(key).get<T>();
            } catch (const json::exception&) {
                throw ConfigError(std::string("config key '") + key + "' has the wrong type");
            }
        }
        return fallback;
    }

    std::string data() {
        used_.push_back("data");
        if (!flags_.data.empty()) return flags_.data;
        if (file_.contains("data") && file_["data"].is_string()) return file_["data"];
        return {};
    }

    BacktestConfig backtest() {
        BacktestConfig c;
        c.lookback = get(flags_.lookback, "lookback", c.lookback);
        c.kappa = get(flags_.kappa, "kappa", c.kappa);
        c.n_top = get(flags_.n_top, "n_top", c.n_top);
        c.m_bottom = get(flags_.m_bottom, "m_bottom", c.m_bottom);
        c.tc_rate = get(flags_.tc_rate, "tc_rate", c.tc_rate);
        c.scheme = parse_scheme(get(flags_.scheme, "scheme", to_string(c.scheme)));
        c.momentum = get(flags_.momentum, "momentum", c.momentum);
        c.estimator_convention = parse_convention(
            get(flags_.estimator, "estimator_convention", to_string(c.estimator_convention)));
        c.orientation =
            parse_orientation(get(flags_.orientation, "orientation", to_string(c.orientation)));
        c.seed = get(flags_.seed, "seed", c.seed);
        c.validate();
        return c;
    }

    // Keys in the file that no part of this command consumed.
    void reject_unknown() const {
        for (const auto& [k, v] : file_.items()) {
            if (k == "command" || k == "threads" || k == "out") continue;
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
                throw ConfigError("unknown config key '" + k + "'");
            }
        }
    }

private:
    const Flags& flags_;
    json file_ = json::object();
    std::vector<std::string> used_;
};

json config_json(const BacktestConfig& c) {
    return {{"lookback", c.lookback},
            {"kappa", c.kappa},
            {"n_top", c.n_top},
            {"m_bottom", c.m_bottom},
            {"tc_rate", c.tc_rate},
            {"scheme", to_string(c.scheme)},
            {"momentum", c.momentum},
            {"estimator_convention", to_string(c.estimator_convention)},
            {"orientation", to_string(c.orientation)},
            {"seed", c.seed}};
}

json summary_json(const PerformanceSummary& s) {
    return {{"ann_mean", s.ann_mean},
            {"ann_std", s.ann_std},
            {"t_stat", s.t_stat},
            {"t_stat_defined", s.t_stat_defined}};
}

json interval_json(const StatInterval& s) {
    return {{"median", s.median}, {"p2_5", s.lower}, {"p97_5", s.upper}};
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir + "'");
    return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& data,
                    const json& config, const json& params) {
    json m = {{"command", command}, {"config", config}, {"params", params}};
    if (!data.empty()) m["data"] = fs::absolute(data).lexically_normal().string();
    write_json(dir / "manifest.json", m);
}

PricePanel load_required(const std::string& path) {
    if (path.empty()) throw ConfigError("--data is required");
    return load_panel(path);
}

double median_holding(const BacktestReport& r) {
    if (r.holding_periods.empty()) return 0.0;
    std::vector<double> h(r.holding_periods.begin(), r.holding_periods.end());
    return median(std::move(h));
}

int cmd_simulate(const Flags& f) {
    Settings s(f, "simulate");
    SyntheticMarketSpec spec;
    spec.n_securities = s.get(f.n_securities, "n_securities", spec.n_securities);
    spec.n_days = s.get(f.n_days, "n_days", spec.n_days);
    spec.n_clusters = s.get(f.n_clusters, "n_clusters", spec.n_clusters);
    spec.spread_reversion = s.get(f.spread_reversion, "spread_reversion", spec.spread_reversion);
    spec.spread_vol = s.get(f.spread_vol, "spread_vol", spec.spread_vol);
    spec.market_vol = s.get(f.market_vol, "market_vol", spec.market_vol);
    spec.seed = s.get(f.seed, "seed", kDefaultSeed);
    s.reject_unknown();
    spec.validate();

    const auto dir = prepare_out(f.out);
    const auto panel = generate_synthetic(spec);
    save_panel(panel, (dir / "panel.csv").string());
    const json params = {{"n_securities", spec.n_securities}, {"n_days", spec.n_days},
                         {"n_clusters", spec.n_clusters},
                         {"spread_reversion", spec.spread_reversion},
                         {"spread_vol", spec.spread_vol},
                         {"market_vol", spec.market_vol},
                         {"seed", spec.seed}};
    write_json(dir / "summary.json", {{"command", "simulate"},
                                      {"panel", "panel.csv"},
                                      {"n_days", panel.num_days()},
                                      {"n_securities", panel.num_securities()},
                                      {"first_date", format_date(panel.dates().front())},
                                      {"last_date", format_date(panel.dates().back())}});
    write_manifest(dir, "simulate", "", json::object(), params);
    return 0;
}

int cmd_rank(const Flags& f) {
    Settings s(f, "rank");
    const auto data = s.data();
    const auto config = s.backtest();
    auto date_text = s.get(f.date, "date", std::string{});
    s.reject_unknown();

    const auto panel = load_required(data);
    const std::size_t t =
        date_text.empty() ? panel.num_days() - 1 : panel.date_index(parse_date(date_text));
    if (t < config.lookback) {
        throw InsufficientHistoryError("date " + format_date(panel.dates()[t]) + " has fewer than " +
                                       std::to_string(config.lookback) + " days of history");
    }
    date_text = format_date(panel.dates()[t]);
    const auto rho = preference_matrix(panel, t, config.lookback, config.estimator_convention);
    const auto decision = decide(rho, config);
    const auto weights = allocate(decision.signals, decision.utilities, config.scheme);

    const auto dir = prepare_out(f.out);
    const auto& names = panel.tickers();
    {
        auto out = open_out(dir / "utilities.csv");
        write_utilities_csv(decision.utilities, names, out);
    }
    {
        auto out = open_out(dir / "edges.csv");
        write_edges_csv(decision.pruned, names, out);
    }
    {
        auto out = open_out(dir / "weights.csv");
        out << "ticker,side,weight\n";
        for (std::size_t i = 0; i < weights.w.size(); ++i) {
            if (weights.w[i] == 0.0) continue;
            out << names[i] << ',' << (weights.w[i] > 0.0 ? "long" : "short") << ','
                << detail::format_double(weights.w[i]) << '\n';
        }
    }
    json longs = json::array(), shorts = json::array();
    for (auto i : decision.signals.longs) longs.push_back(names[i]);
    for (auto i : decision.signals.shorts) shorts.push_back(names[i]);
    write_json(dir / "summary.json", {{"command", "rank"},
                                      {"date", date_text},
                                      {"longs", longs},
                                      {"shorts", shorts},
                                      {"edges_thresholded", decision.thresholded.edges.size()},
                                      {"edges_pruned", decision.pruned.edges.size()},
                                      {"degenerate_leg", weights.degenerate_leg}});
    write_manifest(dir, "rank", data, config_json(config), {{"date", date_text}});
    return 0;
}

int cmd_backtest(const Flags& f) {
    Settings s(f, "backtest");
    const auto data = s.data();
    const auto config = s.backtest();
    s.reject_unknown();

    const auto panel = load_required(data);
    const auto report = run_backtest(panel, config);
    const auto dir = prepare_out(f.out);
    {
        auto out = open_out(dir / "daily.csv");
        write_daily_csv(report, panel, out);
    }
    {
        auto out = open_out(dir / "positions.csv");
        write_positions_csv(report, panel, out);
    }
    {
        auto out = open_out(dir / "holding_hist.csv");
        write_holding_hist_csv(report, out);
    }
    json j = summary_json(report.summary);
    j["command"] = "backtest";
    j["traded_days"] = report.traded_days();
    j["average_turnover"] = report.average_turnover();
    j["median_holding_days"] = median_holding(report);
    if (report.traded_days() >= 2) j["gross"] = summary_json(summarize(report.gross_returns));
    if (!report.dates.empty()) {
        j["first_date"] = format_date(report.dates.front());
        j["last_date"] = format_date(report.dates.back());
    }
    write_json(dir / "summary.json", j);
    write_manifest(dir, "backtest", data, config_json(config), json::object());
    return 0;
}

int cmd_bootstrap(const Flags& f) {
    Settings s(f, "bootstrap");
    const auto data = s.data();
    const auto config = s.backtest();
    const auto subset = s.get(f.subset_size, "subset_size", std::size_t{50});
    const auto samples = s.get(f.samples, "samples", std::size_t{100});
    s.reject_unknown();

    const auto panel = load_required(data);
    const auto result = bootstrap_study(panel, config, subset, samples, f.threads);
    const auto dir = prepare_out(f.out);
    {
        auto out = open_out(dir / "samples.csv");
        write_bootstrap_samples_csv(result, panel.tickers(), out);
    }
    write_json(dir / "summary.json", {{"command", "bootstrap"},
                                      {"subset_size", subset},
                                      {"samples", samples},
                                      {"ann_mean", interval_json(result.ann_mean)},
                                      {"ann_std", interval_json(result.ann_std)},
                                      {"t_stat", interval_json(result.t_stat)}});
    write_manifest(dir, "bootstrap", data, config_json(config),
                   {{"subset_size", subset}, {"samples", samples}});
    return 0;
}

int cmd_validate(const Flags& f) {
    Settings s(f, "validate-estimator");
    const auto ns = s.get(f.n_list.empty() ? std::nullopt : std::optional{f.n_list}, "n",
                          std::vector<std::size_t>{100});
    const auto covs = s.get(f.cov_list.empty() ? std::nullopt : std::optional{f.cov_list}, "cov",
                            std::vector<double>{0.0});
    const double sigma2 = s.get(f.sigma2, "sigma2", 1.0);
    const auto trials = s.get(f.trials, "trials", std::size_t{100000});
    const auto seed = s.get(f.seed, "seed", kDefaultSeed);
    s.reject_unknown();

    const auto dir = prepare_out(f.out);
    auto csv = open_out(dir / "variance_study.csv");
    csv << "n,cov,theoretical_var,empirical_var\n";
    json rows = json::array();
    std::size_t row = 0;
    for (const double cov : covs) {
        for (const std::size_t n : ns) {
            NoiseModel noise{sigma2, cov, n, trials, stream_seed(seed, row)};
            const auto stats =
                simulate_estimator(random_utilities(n, stream_seed(seed, 1000000 + row)), noise,
                                   {f.threads, true});
            const double theory = theoretical_mean_var_u(n, sigma2, cov);
            csv << n << ',' << detail::format_double(cov) << ',' << detail::format_double(theory)
                << ',' << detail::format_double(stats.mean_var_u) << '\n';
            rows.push_back({{"n", n},
                            {"cov", cov},
                            {"theoretical_var_u", theory},
                            {"empirical_var_u", stats.mean_var_u},
                            {"uncorrelated_var_rho", uncorrelated_var_rho(n, sigma2)},
                            {"antisymmetric_var_rho", antisymmetric_var_rho(n, sigma2)},
                            {"empirical_var_rho", stats.mean_var_rho},
                            {"max_standardized_bias_u", stats.max_standardized_bias_u},
                            {"max_standardized_bias_rho", stats.max_standardized_bias_rho},
                            {"covariance_floor", covariance_floor(n, cov)}});
            ++row;
        }
    }
    write_json(dir / "summary.json",
               {{"command", "validate-estimator"}, {"trials", trials}, {"rows", rows}});
    write_manifest(dir, "validate-estimator", "", json::object(),
                   {{"n", ns}, {"cov", covs}, {"sigma2", sigma2}, {"trials", trials}, {"seed", seed}});
    return 0;
}

int cmd_regress(const Flags& f) {
    Settings s(f, "regress");
    const auto returns_path = s.get(f.returns, "returns", std::string{});
    const auto factors_path = s.get(f.factors, "factors", std::string{});
    const auto column = s.get(f.column, "column", std::string{"net_return"});
    s.reject_unknown();
    if (returns_path.empty() || factors_path.empty()) {
        throw ConfigError("--returns and --factors are required");
    }

    const auto returns = load_dated_table(returns_path);
    const auto factors = load_dated_table(factors_path);
    const std::size_t rc = returns.column_index(column);

    // Inner join on date; rows with any missing value are dropped.
    std::vector<double> y;
    std::vector<std::vector<double>> x;
    std::size_t j = 0;
    for (std::size_t i = 0; i < returns.dates.size(); ++i) {
        while (j < factors.dates.size() && factors.dates[j] < returns.dates[i]) ++j;
        if (j == factors.dates.size() || factors.dates[j] != returns.dates[i]) continue;
        const double r = returns.rows[i][rc];
        const auto& row = factors.rows[j];
        if (std::isnan(r) || std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
            continue;
        }
        y.push_back(r);
        x.push_back(row);
    }
    Eigen::MatrixXd fx(static_cast<Eigen::Index>(y.size()),
                       static_cast<Eigen::Index>(factors.columns.size()));
    for (std::size_t r = 0; r < y.size(); ++r) {
        for (std::size_t c = 0; c < factors.columns.size(); ++c) {
            fx(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x[r][c];
        }
    }
    const auto result = factor_regression(y, fx, factors.columns);

    auto coef = [](const Coefficient& c) {
        return json{{"estimate", c.estimate}, {"std_error", c.std_error}, {"t_stat", c.t_stat},
                    {"p_value", c.p_value},   {"significant", c.significant}};
    };
    json betas = json::object();
    for (std::size_t k = 0; k < result.betas.size(); ++k) {
        betas[result.factor_names[k]] = coef(result.betas[k]);
    }
    const auto dir = prepare_out(f.out);
    write_json(dir / "summary.json", {{"command", "regress"},
                                      {"column", column},
                                      {"n_obs", result.n_obs},
                                      {"alpha", coef(result.alpha)},
                                      {"betas", betas},
                                      {"r2", result.r2},
                                      {"adj_r2", result.adj_r2}});
    write_manifest(dir, "regress", "", json::object(),
                   {{"returns", fs::absolute(returns_path).lexically_normal().string()},
                    {"factors", fs::absolute(factors_path).lexically_normal().string()},
                    {"column", column}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preference-graph statistical arbitrage toolkit"};
    app.require_subcommand(1);
    Flags f;

    auto* simulate = app.add_subcommand("simulate", "write a synthetic clustered price panel");
    add_common(simulate, f, false);
    simulate->add_option("--n-securities", f.n_securities);
    simulate->add_option("--n-days", f.n_days);
    simulate->add_option("--n-clusters", f.n_clusters);
    simulate->add_option("--spread-reversion", f.spread_reversion);
    simulate->add_option("--spread-vol", f.spread_vol);
    simulate->add_option("--market-vol", f.market_vol);

    auto* rank = app.add_subcommand("rank", "utilities, edges and weights for one date");
    add_common(rank, f, true);
    add_backtest_flags(rank, f);
    rank->add_option("--date", f.date, "YYYY-MM-DD, default last date");

    auto* backtest = app.add_subcommand("backtest", "daily long-short simulation");
    add_common(backtest, f, true);
    add_backtest_flags(backtest, f);

    auto* bootstrap = app.add_subcommand("bootstrap", "security bootstrap study");
    add_common(bootstrap, f, true);
    add_backtest_flags(bootstrap, f);
    bootstrap->add_option("--subset-size", f.subset_size);
    bootstrap->add_option("--samples", f.samples);

    auto* validate = app.add_subcommand("validate-estimator", "Monte Carlo estimator study");
    add_common(validate, f, false);
    validate->add_option("--n", f.n_list, "security counts")->delimiter(',');
    validate->add_option("--cov", f.cov_list, "cross-pair noise covariances")->delimiter(',');
    validate->add_option("--sigma2", f.sigma2);
    validate->add_option("--trials", f.trials);

    auto* regress = app.add_subcommand("regress", "factor regression of daily returns");
    add_common(regress, f, false);
    regress->add_option("--returns", f.returns, "dated CSV, e.g. daily.csv");
    regress->add_option("--factors", f.factors, "CSV with header date,<factor>,...");
    regress->add_option("--column", f.column, "returns column, default net_return");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(f);
        if (*rank) return cmd_rank(f);
        if (*backtest) return cmd_backtest(f);
        if (*bootstrap) return cmd_bootstrap(f);
        if (*validate) return cmd_validate(f);
        if (*regress) return cmd_regress(f);
    } catch (const prefarb::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
