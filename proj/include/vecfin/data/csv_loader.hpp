#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vecfin/data/market_frame.hpp"

namespace vecfin::data {

/// Parses `timestamp,asset,open,high,low,close,volume` rows, aligns assets on
/// the intersection of their timestamps and sorts assets lexicographically.
MarketFrame load_ohlcv_csv(const std::filesystem::path& path,
                           const std::optional<std::vector<std::string>>& expected_assets = std::nullopt);

MarketFrame parse_ohlcv_csv(std::istream& in, const std::string& source_name,
                            const std::optional<std::vector<std::string>>& expected_assets = std::nullopt);

/// Pre-featurized single-asset file: `timestamp,price,f1,...,fI`.
MarketFrame load_lob_csv(const std::filesystem::path& path, const std::string& asset_id = "LOB");

MarketFrame parse_lob_csv(std::istream& in, const std::string& source_name,
                          const std::string& asset_id = "LOB");

/// Writes the frame's OHLCV panels back out in the OHLCV CSV layout.
void write_ohlcv_csv(const std::filesystem::path& path, const MarketFrame& frame);

}  // namespace vecfin::data
