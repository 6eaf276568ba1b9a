#include "vecfin/data/market_frame.hpp"

#include <cmath>
#include <sstream>

#include "vecfin/common/error.hpp"

namespace vecfin::data {

namespace {

Matrix rows(const Matrix& m, std::size_t begin, std::size_t end) {
    if (m.size() == 0) {
        return m;
    }
    return m.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
}

void check_panel(const Matrix& m, std::size_t T, std::size_t K, const char* name) {
    if (static_cast<std::size_t>(m.rows()) != T || static_cast<std::size_t>(m.cols()) != K) {
        std::ostringstream os;
        os << "panel '" << name << "' is " << m.rows() << "x" << m.cols() << ", expected " << T
           << "x" << K;
        fail(ErrorCode::ShapeMismatch, os.str());
    }
}

}  // namespace

MarketFrame MarketFrame::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > num_steps()) {
        std::ostringstream os;
        os << "slice [" << begin << ", " << end << ") outside frame of " << num_steps() << " rows";
        fail(ErrorCode::InvalidArgument, os.str());
    }
    MarketFrame out;
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.asset_ids = asset_ids;
    out.prices = rows(prices, begin, end);
    out.open = rows(open, begin, end);
    out.high = rows(high, begin, end);
    out.low = rows(low, begin, end);
    out.volume = rows(volume, begin, end);
    const std::size_t stride = num_assets() * num_features();
    out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                        features.begin() + static_cast<std::ptrdiff_t>(end * stride));
    out.feature_names = feature_names;
    out.indicator_spec = indicator_spec;
    return out;
}

void MarketFrame::validate() const {
    const std::size_t T = num_steps();
    const std::size_t K = num_assets();
    if (T == 0 || K == 0) {
        fail(ErrorCode::InsufficientData, "frame has no rows or no assets");
    }
    for (std::size_t t = 1; t < T; ++t) {
        if (timestamps[t] <= timestamps[t - 1]) {
            fail(ErrorCode::InvalidArgument, "timestamps are not strictly increasing");
        }
    }
    check_panel(prices, T, K, "prices");
    check_panel(open, T, K, "open");
    check_panel(high, T, K, "high");
    check_panel(low, T, K, "low");
    check_panel(volume, T, K, "volume");
    if (features.size() != T * K * num_features()) {
        fail(ErrorCode::ShapeMismatch, "feature array does not match (T, K, I)");
    }
    for (Eigen::Index i = 0; i < prices.size(); ++i) {
        const double p = prices.data()[i];
        if (!(p > 0.0) || !std::isfinite(p)) {
            fail(ErrorCode::NonPositivePrice, "non-positive or non-finite close price in frame");
        }
    }
}

MarketFrame make_frame(std::vector<std::int64_t> timestamps, std::vector<std::string> asset_ids,
                       Matrix open, Matrix high, Matrix low, Matrix close, Matrix volume) {
    MarketFrame f;
    f.timestamps = std::move(timestamps);
    f.asset_ids = std::move(asset_ids);
    f.open = std::move(open);
    f.high = std::move(high);
    f.low = std::move(low);
    f.prices = std::move(close);
    f.volume = std::move(volume);
    f.validate();
    return f;
}

MarketFrame make_close_only_frame(std::vector<std::int64_t> timestamps,
                                  std::vector<std::string> asset_ids, Matrix close) {
    Matrix volume = Matrix::Zero(close.rows(), close.cols());
    Matrix open = close;
    Matrix high = close;
    Matrix low = close;
    return make_frame(std::move(timestamps), std::move(asset_ids), std::move(open),
                      std::move(high), std::move(low), std::move(close), std::move(volume));
}

bool operator==(const MarketFrame& a, const MarketFrame& b) {
    auto same = [](const Matrix& x, const Matrix& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
    };
    return a.timestamps == b.timestamps && a.asset_ids == b.asset_ids && same(a.prices, b.prices) &&
           same(a.open, b.open) && same(a.high, b.high) && same(a.low, b.low) &&
           same(a.volume, b.volume) &&
           a.features == b.features && a.feature_names == b.feature_names &&
           a.indicator_spec == b.indicator_spec;
}

}  // namespace vecfin::data
