#pragma once

#include <cstdint>
#include <vector>

#include "vecfin/data/market_frame.hpp"

namespace vecfin::data {

/// Scale factor applied to asset k by perturb_prices(seed, magnitude).
double perturbation_factor(std::uint64_t seed, std::size_t asset, double magnitude);

/// Multiplies every price of asset k by one factor drawn uniformly from
/// [1 - magnitude, 1 + magnitude]; indicators are recomputed when the frame
/// carries an indicator spec.
MarketFrame perturb_prices(const MarketFrame& frame, std::uint64_t seed, double magnitude = 0.01);

/// Keeps only the listed asset columns (in the given order).
MarketFrame select_assets(const MarketFrame& frame, const std::vector<std::size_t>& assets);

/// Picks `count` distinct asset indices (sorted) using `seed`.
std::vector<std::size_t> sample_asset_subset(std::size_t K, std::size_t count, std::uint64_t seed);

}  // namespace vecfin::data
