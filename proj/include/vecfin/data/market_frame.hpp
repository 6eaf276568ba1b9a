#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vecfin/common/matrix.hpp"
#include "vecfin/data/indicators.hpp"

namespace vecfin::data {

/// One OHLCV bar as read from disk.
struct Bar {
    std::int64_t timestamp = 0;
    std::string asset_id;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

/// Aligned panel of T steps by K assets. `prices` holds closes; the other
/// OHLCV panels are kept so indicators needing highs and lows can be
/// recomputed after augmentation. Features are stored flat, indexed
/// (t * K + k) * I + i.
struct MarketFrame {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> asset_ids;
    Matrix prices;
    Matrix open;
    Matrix high;
    Matrix low;
    Matrix volume;
    std::vector<double> features;
    std::vector<std::string> feature_names;
    /// Set when features came from compute_indicators.
    std::optional<IndicatorSpec> indicator_spec;

    std::size_t num_steps() const { return timestamps.size(); }
    std::size_t num_assets() const { return asset_ids.size(); }
    std::size_t num_features() const { return feature_names.size(); }

    double price(std::size_t t, std::size_t k) const { return prices(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)); }
    double feature(std::size_t t, std::size_t k, std::size_t i) const {
        return features[(t * num_assets() + k) * num_features() + i];
    }
    const double* feature_row(std::size_t t) const {
        return features.data() + t * num_assets() * num_features();
    }

    /// Rows [begin, end) as a new frame. Features are copied, not recomputed.
    MarketFrame slice(std::size_t begin, std::size_t end) const;

    /// Throws on any violated invariant (dimensions, positivity, ordering).
    void validate() const;
};

/// Builds a frame from per-step OHLC panels with no features. All panels
/// must be T x K.
MarketFrame make_frame(std::vector<std::int64_t> timestamps, std::vector<std::string> asset_ids,
                       Matrix open, Matrix high, Matrix low, Matrix close, Matrix volume);

/// Frame whose open/high/low equal the close and volume is zero.
MarketFrame make_close_only_frame(std::vector<std::int64_t> timestamps,
                                  std::vector<std::string> asset_ids, Matrix close);

bool operator==(const MarketFrame& a, const MarketFrame& b);

}  // namespace vecfin::data
