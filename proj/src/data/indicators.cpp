#include "vecfin/data/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vecfin/common/error.hpp"
#include "vecfin/data/market_frame.hpp"

namespace vecfin::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_period(int period, const char* name) {
    if (period < 1) {
        fail(ErrorCode::InvalidArgument, std::string(name) + " period must be >= 1");
    }
}

std::size_t first_finite(std::span<const double> x) {
    std::size_t i = 0;
    while (i < x.size() && !std::isfinite(x[i])) {
        ++i;
    }
    return i;
}

// Wilder running sum: seeded with the plain sum of x[1..p], then
// S_t = S_{t-1} - S_{t-1}/p + x_t. Index 0 is unused (no prior bar).
std::vector<double> wilder_sum(const std::vector<double>& x, int period) {
    const std::size_t n = x.size();
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out(n, kNaN);
    if (n <= p) {
        return out;
    }
    double s = 0.0;
    for (std::size_t t = 1; t <= p; ++t) {
        s += x[t];
    }
    out[p] = s;
    for (std::size_t t = p + 1; t < n; ++t) {
        s = s - s / static_cast<double>(period) + x[t];
        out[t] = s;
    }
    return out;
}

}  // namespace

std::size_t IndicatorSpec::lookback() const {
    std::size_t lb = 1;
    auto take = [&lb](std::size_t v) { lb = std::max(lb, v); };
    if (macd) take(static_cast<std::size_t>(macd_slow));
    if (bollinger) take(static_cast<std::size_t>(bollinger_period));
    if (rsi) take(static_cast<std::size_t>(rsi_period) + 1);
    if (cci) take(static_cast<std::size_t>(cci_period));
    if (dx) take(static_cast<std::size_t>(dx_period) + 1);
    for (int w : sma_windows) take(static_cast<std::size_t>(w));
    return lb;
}

std::vector<std::string> IndicatorSpec::feature_names() const {
    std::vector<std::string> names;
    if (macd) names.emplace_back("macd");
    if (bollinger) names.emplace_back("boll_pctb");
    if (rsi) names.emplace_back("rsi");
    if (cci) names.emplace_back("cci");
    if (dx) names.emplace_back("dx");
    for (int w : sma_windows) names.push_back("sma_" + std::to_string(w));
    return names;
}

IndicatorSpec IndicatorSpec::none() {
    IndicatorSpec s;
    s.macd = s.bollinger = s.rsi = s.cci = s.dx = false;
    s.sma_windows.clear();
    return s;
}

void IndicatorSpec::validate() const {
    if (macd) {
        require_period(macd_fast, "macd fast");
        require_period(macd_slow, "macd slow");
        require_period(macd_signal, "macd signal");
        if (macd_fast >= macd_slow) {
            fail(ErrorCode::InvalidArgument, "macd fast period must be shorter than slow period");
        }
    }
    if (bollinger) require_period(bollinger_period, "bollinger");
    if (rsi) require_period(rsi_period, "rsi");
    if (cci) require_period(cci_period, "cci");
    if (dx) require_period(dx_period, "dx");
    for (int w : sma_windows) require_period(w, "sma");
}

bool operator==(const IndicatorSpec& a, const IndicatorSpec& b) {
    return a.macd == b.macd && a.macd_fast == b.macd_fast && a.macd_slow == b.macd_slow &&
           a.macd_signal == b.macd_signal && a.bollinger == b.bollinger &&
           a.bollinger_period == b.bollinger_period && a.bollinger_k == b.bollinger_k &&
           a.rsi == b.rsi && a.rsi_period == b.rsi_period && a.cci == b.cci &&
           a.cci_period == b.cci_period && a.cci_constant == b.cci_constant && a.dx == b.dx &&
           a.dx_period == b.dx_period && a.sma_windows == b.sma_windows;
}

void to_json(nlohmann::json& j, const IndicatorSpec& s) {
    j = nlohmann::json::object();
    if (s.macd) j["macd"] = {{"fast", s.macd_fast}, {"slow", s.macd_slow}, {"signal", s.macd_signal}};
    if (s.bollinger) j["bollinger"] = {{"period", s.bollinger_period}, {"k", s.bollinger_k}};
    if (s.rsi) j["rsi"] = {{"period", s.rsi_period}};
    if (s.cci) j["cci"] = {{"period", s.cci_period}, {"constant", s.cci_constant}};
    if (s.dx) j["dx"] = {{"period", s.dx_period}};
    if (!s.sma_windows.empty()) j["sma"] = {{"windows", s.sma_windows}};
}

void from_json(const nlohmann::json& j, IndicatorSpec& s) {
    // Sections present are enabled; absent sections are disabled.
    s = IndicatorSpec::none();
    if (j.contains("macd")) {
        const auto& m = j.at("macd");
        s.macd = true;
        IndicatorSpec d;
        s.macd_fast = m.value("fast", d.macd_fast);
        s.macd_slow = m.value("slow", d.macd_slow);
        s.macd_signal = m.value("signal", d.macd_signal);
    }
    if (j.contains("bollinger")) {
        const auto& b = j.at("bollinger");
        s.bollinger = true;
        s.bollinger_period = b.value("period", 20);
        s.bollinger_k = b.value("k", 2.0);
    }
    if (j.contains("rsi")) {
        s.rsi = true;
        s.rsi_period = j.at("rsi").value("period", 14);
    }
    if (j.contains("cci")) {
        s.cci = true;
        s.cci_period = j.at("cci").value("period", 20);
        s.cci_constant = j.at("cci").value("constant", 0.015);
    }
    if (j.contains("dx")) {
        s.dx = true;
        s.dx_period = j.at("dx").value("period", 14);
    }
    if (j.contains("sma")) {
        s.sma_windows = j.at("sma").value("windows", std::vector<int>{30, 60});
    }
    s.validate();
}

std::vector<double> sma(std::span<const double> x, int window) {
    require_period(window, "sma");
    const auto w = static_cast<std::size_t>(window);
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t t = w - 1; t < x.size(); ++t) {
        double s = 0.0;
        for (std::size_t j = t + 1 - w; j <= t; ++j) {
            s += x[j];
        }
        out[t] = s / static_cast<double>(w);
    }
    return out;
}

std::vector<double> ema(std::span<const double> x, int period) {
    require_period(period, "ema");
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out(x.size(), kNaN);
    const std::size_t start = first_finite(x);
    if (start + p > x.size()) {
        return out;
    }
    double s = 0.0;
    for (std::size_t j = start; j < start + p; ++j) {
        s += x[j];
    }
    double value = s / static_cast<double>(p);
    out[start + p - 1] = value;
    const double alpha = 2.0 / (static_cast<double>(period) + 1.0);
    for (std::size_t t = start + p; t < x.size(); ++t) {
        value = alpha * x[t] + (1.0 - alpha) * value;
        out[t] = value;
    }
    return out;
}

MacdSeries macd(std::span<const double> close, int fast, int slow, int signal) {
    const auto fast_ema = ema(close, fast);
    const auto slow_ema = ema(close, slow);
    MacdSeries out;
    out.line.resize(close.size(), kNaN);
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (std::isfinite(fast_ema[t]) && std::isfinite(slow_ema[t])) {
            out.line[t] = fast_ema[t] - slow_ema[t];
        }
    }
    out.signal = ema(out.line, signal);
    out.histogram.resize(close.size(), kNaN);
    for (std::size_t t = 0; t < close.size(); ++t) {
        if (std::isfinite(out.signal[t])) {
            out.histogram[t] = out.line[t] - out.signal[t];
        }
    }
    return out;
}

std::vector<double> rsi(std::span<const double> close, int period) {
    require_period(period, "rsi");
    const auto p = static_cast<std::size_t>(period);
    const std::size_t n = close.size();
    std::vector<double> out(n, kNaN);
    if (n <= p) {
        return out;
    }
    auto value = [](double gain, double loss) {
        if (loss == 0.0) {
            return gain > 0.0 ? 100.0 : 50.0;
        }
        return 100.0 - 100.0 / (1.0 + gain / loss);
    };
    double gain = 0.0;
    double loss = 0.0;
    for (std::size_t t = 1; t <= p; ++t) {
        const double d = close[t] - close[t - 1];
        gain += std::max(d, 0.0);
        loss += std::max(-d, 0.0);
    }
    gain /= static_cast<double>(p);
    loss /= static_cast<double>(p);
    out[p] = value(gain, loss);
    const double pd = static_cast<double>(p);
    for (std::size_t t = p + 1; t < n; ++t) {
        const double d = close[t] - close[t - 1];
        gain = (gain * (pd - 1.0) + std::max(d, 0.0)) / pd;
        loss = (loss * (pd - 1.0) + std::max(-d, 0.0)) / pd;
        out[t] = value(gain, loss);
    }
    return out;
}

std::vector<double> bollinger_percent_b(std::span<const double> close, int period, double k) {
    require_period(period, "bollinger");
    const auto p = static_cast<std::size_t>(period);
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = p - 1; t < close.size(); ++t) {
        double mean = 0.0;
        for (std::size_t j = t + 1 - p; j <= t; ++j) {
            mean += close[j];
        }
        mean /= static_cast<double>(p);
        double var = 0.0;
        for (std::size_t j = t + 1 - p; j <= t; ++j) {
            const double d = close[j] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(p));
        if (sd == 0.0) {
            out[t] = 0.5;
        } else {
            const double lower = mean - k * sd;
            const double upper = mean + k * sd;
            out[t] = (close[t] - lower) / (upper - lower);
        }
    }
    return out;
}

std::vector<double> cci(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, int period, double constant) {
    require_period(period, "cci");
    const auto p = static_cast<std::size_t>(period);
    const std::size_t n = close.size();
    std::vector<double> tp(n);
    for (std::size_t t = 0; t < n; ++t) {
        tp[t] = (high[t] + low[t] + close[t]) / 3.0;
    }
    std::vector<double> out(n, kNaN);
    for (std::size_t t = p - 1; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t j = t + 1 - p; j <= t; ++j) {
            mean += tp[j];
        }
        mean /= static_cast<double>(p);
        double md = 0.0;
        for (std::size_t j = t + 1 - p; j <= t; ++j) {
            md += std::abs(tp[j] - mean);
        }
        md /= static_cast<double>(p);
        out[t] = md == 0.0 ? 0.0 : (tp[t] - mean) / (constant * md);
    }
    return out;
}

std::vector<double> dx(std::span<const double> high, std::span<const double> low,
                       std::span<const double> close, int period) {
    require_period(period, "dx");
    const std::size_t n = close.size();
    std::vector<double> plus_dm(n, 0.0);
    std::vector<double> minus_dm(n, 0.0);
    std::vector<double> tr(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) {
        const double up = high[t] - high[t - 1];
        const double down = low[t - 1] - low[t];
        plus_dm[t] = (up > down && up > 0.0) ? up : 0.0;
        minus_dm[t] = (down > up && down > 0.0) ? down : 0.0;
        tr[t] = std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                          std::abs(low[t] - close[t - 1])});
    }
    const auto sp = wilder_sum(plus_dm, period);
    const auto sm = wilder_sum(minus_dm, period);
    const auto st = wilder_sum(tr, period);
    std::vector<double> out(n, kNaN);
    for (std::size_t t = 0; t < n; ++t) {
        if (!std::isfinite(st[t])) {
            continue;
        }
        const double pdi = st[t] == 0.0 ? 0.0 : 100.0 * sp[t] / st[t];
        const double mdi = st[t] == 0.0 ? 0.0 : 100.0 * sm[t] / st[t];
        const double sum = pdi + mdi;
        out[t] = sum == 0.0 ? 0.0 : 100.0 * std::abs(pdi - mdi) / sum;
    }
    return out;
}

void backfill(std::vector<double>& series) {
    const std::size_t first = first_finite(series);
    if (first >= series.size()) {
        return;
    }
    std::fill(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(first), series[first]);
}

MarketFrame compute_indicators(const MarketFrame& frame, const IndicatorSpec& spec) {
    spec.validate();
    const std::size_t T = frame.num_steps();
    const std::size_t K = frame.num_assets();
    if (T < spec.lookback()) {
        fail(ErrorCode::InsufficientHistory,
             "frame has " + std::to_string(T) + " rows, indicators need " +
                 std::to_string(spec.lookback()));
    }
    MarketFrame out = frame;
    out.feature_names = spec.feature_names();
    out.indicator_spec = spec;
    const std::size_t I = out.feature_names.size();
    out.features.assign(T * K * I, 0.0);

    std::vector<double> c(T), h(T), l(T);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
            c[t] = frame.price(t, k);
            h[t] = frame.high(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            l[t] = frame.low(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
        }
        std::vector<std::vector<double>> columns;
        if (spec.macd) columns.push_back(macd(c, spec.macd_fast, spec.macd_slow, spec.macd_signal).line);
        if (spec.bollinger) columns.push_back(bollinger_percent_b(c, spec.bollinger_period, spec.bollinger_k));
        if (spec.rsi) columns.push_back(rsi(c, spec.rsi_period));
        if (spec.cci) columns.push_back(cci(h, l, c, spec.cci_period, spec.cci_constant));
        if (spec.dx) columns.push_back(dx(h, l, c, spec.dx_period));
        for (int w : spec.sma_windows) columns.push_back(sma(c, w));
        for (std::size_t i = 0; i < I; ++i) {
            backfill(columns[i]);
            for (std::size_t t = 0; t < T; ++t) {
                out.features[(t * K + k) * I + i] = columns[i][t];
            }
        }
    }
    return out;
}

}  // namespace vecfin::data
