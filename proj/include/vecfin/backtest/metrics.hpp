#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vecfin::backtest {

/// Wealth marks in time order. For backtests point 0 is the opening mark at
/// the close before the first traded row.
struct EquityCurve {
    std::vector<std::int64_t> timestamps;
    std::vector<double> wealth;

    std::size_t size() const { return wealth.size(); }
    /// r_t = w_t / w_{t-1} - 1 for t >= 1.
    std::vector<double> returns() const;
    void append(std::int64_t timestamp, double value);
};

struct Fill {
    std::int64_t timestamp = 0;
    std::size_t asset = 0;
    /// Signed share delta.
    double quantity = 0.0;
    double price = 0.0;
    double fee = 0.0;
};

/// Realized P&L of one sell fill matched FIFO against open buy lots.
struct RoundTrip {
    std::int64_t timestamp = 0;
    std::size_t asset = 0;
    double quantity = 0.0;
    double pnl = 0.0;
};

class TradeLog {
public:
    void record(const Fill& fill);
    const std::vector<Fill>& fills() const { return fills_; }
    /// One entry per sell fill. Buy fees are charged to the lots they opened.
    std::vector<RoundTrip> round_trips() const;
    std::size_t size() const { return fills_.size(); }

private:
    std::vector<Fill> fills_;
};

struct MetricsReport {
    double cumulative_return = 0.0;
    double annual_return = 0.0;
    double annual_volatility = 0.0;
    double sharpe = 0.0;
    double sortino = 0.0;
    double max_drawdown = 0.0;
    double romad = 0.0;
    double calmar = 0.0;
    double omega = 0.0;
    double win_loss_ratio = 0.0;
    double periods_per_year = 252.0;
    std::size_t num_round_trips = 0;
    /// Names of metrics that hold a sentinel (NaN or infinity) and why.
    std::vector<std::string> flags;
};

/// Metric names in report order.
const std::vector<std::string>& metric_names();
/// Value of a metric by name.
double metric_value(const MetricsReport& report, const std::string& name);

/// `rf` is an annual rate; per-period rf is rf / periods_per_year.
MetricsReport compute_metrics(const EquityCurve& curve, const TradeLog& trades, double rf = 0.0,
                              double periods_per_year = 252.0);

/// d_t = w_t / max_{s<=t} w_s - 1
std::vector<double> drawdown_curve(const EquityCurve& curve);

/// Non-finite values become null.
void to_json(nlohmann::json& j, const MetricsReport& m);
void from_json(const nlohmann::json& j, MetricsReport& m);

}  // namespace vecfin::backtest
