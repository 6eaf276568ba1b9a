#include "vecfin/data/augment.hpp"

#include <algorithm>
#include <numeric>

#include "vecfin/common/error.hpp"
#include "vecfin/common/rng.hpp"

namespace vecfin::data {

double perturbation_factor(std::uint64_t seed, std::size_t asset, double magnitude) {
    if (magnitude == 0.0) {
        return 1.0;
    }
    Rng rng = make_rng(seed, asset);
    return uniform(rng, 1.0 - magnitude, 1.0 + magnitude);
}

MarketFrame perturb_prices(const MarketFrame& frame, std::uint64_t seed, double magnitude) {
    if (!(magnitude >= 0.0 && magnitude <= 0.1)) {
        fail(ErrorCode::InvalidArgument, "perturbation magnitude must lie in [0, 0.1]");
    }
    MarketFrame out = frame;
    for (std::size_t k = 0; k < frame.num_assets(); ++k) {
        const double c = perturbation_factor(seed, k, magnitude);
        const auto col = static_cast<Eigen::Index>(k);
        out.prices.col(col) *= c;
        out.open.col(col) *= c;
        out.high.col(col) *= c;
        out.low.col(col) *= c;
    }
    if (frame.indicator_spec) {
        out = compute_indicators(out, *frame.indicator_spec);
    }
    return out;
}

MarketFrame select_assets(const MarketFrame& frame, const std::vector<std::size_t>& assets) {
    if (assets.empty()) {
        fail(ErrorCode::InvalidArgument, "asset subset is empty");
    }
    const std::size_t T = frame.num_steps();
    const std::size_t K = frame.num_assets();
    const std::size_t I = frame.num_features();
    const auto n = static_cast<Eigen::Index>(assets.size());
    MarketFrame out;
    out.timestamps = frame.timestamps;
    out.feature_names = frame.feature_names;
    out.indicator_spec = frame.indicator_spec;
    out.prices.resize(static_cast<Eigen::Index>(T), n);
    out.open.resize(static_cast<Eigen::Index>(T), n);
    out.high.resize(static_cast<Eigen::Index>(T), n);
    out.low.resize(static_cast<Eigen::Index>(T), n);
    out.volume.resize(static_cast<Eigen::Index>(T), n);
    out.features.resize(T * assets.size() * I);
    for (std::size_t j = 0; j < assets.size(); ++j) {
        const std::size_t k = assets[j];
        if (k >= K) {
            fail(ErrorCode::IndexOutOfRange, "asset index " + std::to_string(k) + " out of range");
        }
        out.asset_ids.push_back(frame.asset_ids[k]);
        const auto src = static_cast<Eigen::Index>(k);
        const auto dst = static_cast<Eigen::Index>(j);
        out.prices.col(dst) = frame.prices.col(src);
        out.open.col(dst) = frame.open.col(src);
        out.high.col(dst) = frame.high.col(src);
        out.low.col(dst) = frame.low.col(src);
        out.volume.col(dst) = frame.volume.col(src);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t i = 0; i < I; ++i) {
                out.features[(t * assets.size() + j) * I + i] = frame.feature(t, k, i);
            }
        }
    }
    out.validate();
    return out;
}

std::vector<std::size_t> sample_asset_subset(std::size_t K, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > K) {
        fail(ErrorCode::InvalidArgument, "asset subset size must be in [1, K]");
    }
    std::vector<std::size_t> idx(K);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed, 0xA55E7);
    // Partial Fisher-Yates so the draw does not depend on std::shuffle internals.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, K - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace vecfin::data
