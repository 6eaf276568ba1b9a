#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vecfin/backtest/metrics.hpp"

namespace vecfin::backtest {

/// `timestamp,wealth,return`; the first row's return is 0.
void write_equity_csv(const std::filesystem::path& path, const EquityCurve& curve);
EquityCurve read_equity_csv(const std::filesystem::path& path);

/// `timestamp,asset,quantity,price,fee`
void write_trades_csv(const std::filesystem::path& path, const TradeLog& trades,
                      const std::vector<std::string>& asset_ids);

/// One object: {"strategy": name, metric fields..., "flags": [...]}.
void write_metrics_json(const std::filesystem::path& path, const std::string& strategy,
                        const MetricsReport& report);
MetricsReport read_metrics_json(const std::filesystem::path& path, std::string* strategy = nullptr);

/// %.17g
std::string format_double(double v);

}  // namespace vecfin::backtest
