#include "vecfin/backtest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "vecfin/common/error.hpp"

namespace vecfin::backtest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

/// num / den where den == 0 gives a signed infinity or NaN, flagged as `name`.
double ratio(double num, double den, const char* name, std::vector<std::string>& flags) {
    if (den != 0.0) {
        return num / den;
    }
    if (num > 0.0) {
        flags.push_back(std::string(name) + ":infinite");
        return kInf;
    }
    if (num < 0.0) {
        flags.push_back(std::string(name) + ":negative_infinite");
        return -kInf;
    }
    flags.push_back(std::string(name) + ":undefined");
    return kNaN;
}

}  // namespace

std::vector<double> EquityCurve::returns() const {
    std::vector<double> r;
    for (std::size_t t = 1; t < wealth.size(); ++t) {
        r.push_back(wealth[t] / wealth[t - 1] - 1.0);
    }
    return r;
}

void EquityCurve::append(std::int64_t timestamp, double value) {
    timestamps.push_back(timestamp);
    wealth.push_back(value);
}

void TradeLog::record(const Fill& fill) {
    if (fill.quantity == 0.0) {
        fail(ErrorCode::InvalidArgument, "trade quantity must be nonzero");
    }
    fills_.push_back(fill);
}

std::vector<RoundTrip> TradeLog::round_trips() const {
    struct Lot {
        double quantity;
        double cost_per_share;
    };
    std::map<std::size_t, std::deque<Lot>> open;
    std::vector<RoundTrip> trips;
    for (const Fill& f : fills_) {
        auto& lots = open[f.asset];
        if (f.quantity > 0.0) {
            lots.push_back({f.quantity, f.price + f.fee / f.quantity});
            continue;
        }
        double remaining = -f.quantity;
        const double proceeds_per_share = f.price - f.fee / remaining;
        double pnl = 0.0;
        double matched = 0.0;
        while (remaining > 0.0 && !lots.empty()) {
            Lot& lot = lots.front();
            const double q = std::min(remaining, lot.quantity);
            pnl += q * (proceeds_per_share - lot.cost_per_share);
            matched += q;
            remaining -= q;
            lot.quantity -= q;
            if (lot.quantity <= 0.0) {
                lots.pop_front();
            }
        }
        trips.push_back({f.timestamp, f.asset, matched, pnl});
    }
    return trips;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "cumulative_return", "annual_return", "annual_volatility", "sharpe", "sortino",
        "max_drawdown",      "romad",         "calmar",            "omega",  "win_loss_ratio"};
    return names;
}

double metric_value(const MetricsReport& m, const std::string& name) {
    if (name == "cumulative_return") return m.cumulative_return;
    if (name == "annual_return") return m.annual_return;
    if (name == "annual_volatility") return m.annual_volatility;
    if (name == "sharpe") return m.sharpe;
    if (name == "sortino") return m.sortino;
    if (name == "max_drawdown") return m.max_drawdown;
    if (name == "romad") return m.romad;
    if (name == "calmar") return m.calmar;
    if (name == "omega") return m.omega;
    if (name == "win_loss_ratio") return m.win_loss_ratio;
    fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

std::vector<double> drawdown_curve(const EquityCurve& curve) {
    if (curve.wealth.empty()) {
        fail(ErrorCode::InvalidArgument, "drawdown of an empty curve");
    }
    std::vector<double> d(curve.size());
    double peak = curve.wealth.front();
    for (std::size_t t = 0; t < curve.size(); ++t) {
        peak = std::max(peak, curve.wealth[t]);
        d[t] = curve.wealth[t] / peak - 1.0;
    }
    return d;
}

MetricsReport compute_metrics(const EquityCurve& curve, const TradeLog& trades, double rf,
                              double periods_per_year) {
    if (curve.size() < 2) {
        fail(ErrorCode::InvalidArgument, "metrics need at least two wealth points");
    }
    if (!(periods_per_year > 0.0)) {
        fail(ErrorCode::InvalidArgument, "periods_per_year must be > 0");
    }
    for (double w : curve.wealth) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            fail(ErrorCode::InvalidArgument, "wealth must be finite and > 0");
        }
    }
    MetricsReport m;
    m.periods_per_year = periods_per_year;
    const auto r = curve.returns();
    const double n = static_cast<double>(r.size());
    const double rf_pp = rf / periods_per_year;
    const double ann = std::sqrt(periods_per_year);

    m.cumulative_return = curve.wealth.back() / curve.wealth.front() - 1.0;
    m.annual_return = std::pow(1.0 + m.cumulative_return, periods_per_year / n) - 1.0;

    double mean = 0.0;
    for (double x : r) {
        mean += x;
    }
    mean /= n;
    double ss = 0.0;
    double downside = 0.0;
    double gains = 0.0;
    double losses = 0.0;
    for (double x : r) {
        ss += (x - mean) * (x - mean);
        const double below = std::min(x - rf_pp, 0.0);
        downside += below * below;
        gains += std::max(x - rf_pp, 0.0);
        losses += std::max(rf_pp - x, 0.0);
    }
    if (r.size() >= 2) {
        const double sd = std::sqrt(ss / (n - 1.0));
        m.annual_volatility = sd * ann;
        m.sharpe = ratio(mean - rf_pp, sd, "sharpe", m.flags) * ann;
    } else {
        m.annual_volatility = kNaN;
        m.sharpe = kNaN;
        m.flags.push_back("annual_volatility:undefined");
        m.flags.push_back("sharpe:undefined");
    }
    m.sortino = ratio(mean - rf_pp, std::sqrt(downside / n), "sortino", m.flags) * ann;

    const auto dd = drawdown_curve(curve);
    m.max_drawdown = *std::min_element(dd.begin(), dd.end());
    m.romad = ratio(m.cumulative_return, std::abs(m.max_drawdown), "romad", m.flags);
    m.calmar = ratio(m.annual_return, std::abs(m.max_drawdown), "calmar", m.flags);
    m.omega = ratio(gains, losses, "omega", m.flags);

    std::size_t wins = 0;
    std::size_t lost = 0;
    const auto trips = trades.round_trips();
    for (const auto& t : trips) {
        if (t.pnl > 0.0) {
            ++wins;
        } else if (t.pnl < 0.0) {
            ++lost;
        }
    }
    m.num_round_trips = trips.size();
    m.win_loss_ratio =
        ratio(static_cast<double>(wins), static_cast<double>(lost), "win_loss_ratio", m.flags);
    return m;
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double from_number_or_null(const nlohmann::json& j, const std::string& key,
                           const std::vector<std::string>& flags) {
    const auto& v = j.at(key);
    if (!v.is_null()) {
        return v.get<double>();
    }
    for (const auto& f : flags) {
        if (f == key + ":infinite") return kInf;
        if (f == key + ":negative_infinite") return -kInf;
    }
    return kNaN;
}

}  // namespace

void to_json(nlohmann::json& j, const MetricsReport& m) {
    j = nlohmann::json::object();
    for (const auto& name : metric_names()) {
        j[name] = number_or_null(metric_value(m, name));
    }
    j["periods_per_year"] = m.periods_per_year;
    j["num_round_trips"] = m.num_round_trips;
    j["flags"] = m.flags;
}

void from_json(const nlohmann::json& j, MetricsReport& m) {
    m.flags = j.value("flags", std::vector<std::string>{});
    m.cumulative_return = from_number_or_null(j, "cumulative_return", m.flags);
    m.annual_return = from_number_or_null(j, "annual_return", m.flags);
    m.annual_volatility = from_number_or_null(j, "annual_volatility", m.flags);
    m.sharpe = from_number_or_null(j, "sharpe", m.flags);
    m.sortino = from_number_or_null(j, "sortino", m.flags);
    m.max_drawdown = from_number_or_null(j, "max_drawdown", m.flags);
    m.romad = from_number_or_null(j, "romad", m.flags);
    m.calmar = from_number_or_null(j, "calmar", m.flags);
    m.omega = from_number_or_null(j, "omega", m.flags);
    m.win_loss_ratio = from_number_or_null(j, "win_loss_ratio", m.flags);
    m.periods_per_year = j.value("periods_per_year", 252.0);
    m.num_round_trips = j.value("num_round_trips", std::size_t{0});
}

}  // namespace vecfin::backtest
