#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vecfin::data {

struct MarketFrame;

/// Which technical features to emit per asset, in this fixed order:
/// macd, boll_pctb, rsi, cci, dx, then one sma per window.
struct IndicatorSpec {
    bool macd = true;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;

    bool bollinger = true;
    int bollinger_period = 20;
    double bollinger_k = 2.0;

    bool rsi = true;
    int rsi_period = 14;

    bool cci = true;
    int cci_period = 20;
    double cci_constant = 0.015;

    bool dx = true;
    int dx_period = 14;

    std::vector<int> sma_windows{30, 60};

    /// Minimum number of rows for every enabled feature to have a valid value.
    std::size_t lookback() const;
    std::vector<std::string> feature_names() const;
    std::size_t num_features() const { return feature_names().size(); }

    static IndicatorSpec none();
    void validate() const;
};

bool operator==(const IndicatorSpec& a, const IndicatorSpec& b);

void to_json(nlohmann::json& j, const IndicatorSpec& spec);
void from_json(const nlohmann::json& j, IndicatorSpec& spec);

// Single-series indicators. Entries before the first valid index are NaN;
// every function is causal (value at t uses inputs at s <= t only).

std::vector<double> sma(std::span<const double> x, int window);
/// EMA seeded with the SMA of the first `period` values.
std::vector<double> ema(std::span<const double> x, int period);

struct MacdSeries {
    std::vector<double> line;
    std::vector<double> signal;
    std::vector<double> histogram;
};
MacdSeries macd(std::span<const double> close, int fast, int slow, int signal);

/// Wilder-smoothed RSI. 100 when the average loss is zero, 50 when both
/// averages are zero.
std::vector<double> rsi(std::span<const double> close, int period);

/// Bollinger %B with population standard deviation; 0.5 on a flat band.
std::vector<double> bollinger_percent_b(std::span<const double> close, int period, double k);

/// Commodity channel index on the typical price (h+l+c)/3; 0 when the mean
/// deviation vanishes.
std::vector<double> cci(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, int period, double constant);

/// Directional movement index from Wilder-smoothed +DI/-DI; 0 when both are 0.
std::vector<double> dx(std::span<const double> high, std::span<const double> low,
                       std::span<const double> close, int period);

/// Replaces the leading NaN run with the first finite value.
void backfill(std::vector<double>& series);

/// Returns a copy of `frame` with features replaced by the indicators in `spec`.
MarketFrame compute_indicators(const MarketFrame& frame, const IndicatorSpec& spec);

}  // namespace vecfin::data
