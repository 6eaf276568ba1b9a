#include "vecfin/data/synth.hpp"

#include <cmath>
#include <numbers>

#include "vecfin/common/error.hpp"
#include "vecfin/common/rng.hpp"

namespace vecfin::data {

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "gbm") return SynthKind::gbm;
    if (name == "sine") return SynthKind::sine;
    if (name == "sawtooth") return SynthKind::sawtooth;
    fail(ErrorCode::ConfigError, "unknown synthetic series kind '" + name + "'");
}

std::string to_string(SynthKind kind) {
    switch (kind) {
    case SynthKind::gbm: return "gbm";
    case SynthKind::sine: return "sine";
    case SynthKind::sawtooth: return "sawtooth";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const SynthParams& p) {
    j = {{"base_price", p.base_price}, {"drift", p.drift},         {"volatility", p.volatility},
         {"amplitude", p.amplitude},   {"period", p.period},       {"phase", p.phase},
         {"random_phase", p.random_phase}, {"start_timestamp", p.start_timestamp},
         {"time_step", p.time_step}};
}

void from_json(const nlohmann::json& j, SynthParams& p) {
    const SynthParams d;
    p.base_price = j.value("base_price", d.base_price);
    p.drift = j.value("drift", d.drift);
    p.volatility = j.value("volatility", d.volatility);
    p.amplitude = j.value("amplitude", d.amplitude);
    p.period = j.value("period", d.period);
    p.phase = j.value("phase", d.phase);
    p.random_phase = j.value("random_phase", d.random_phase);
    p.start_timestamp = j.value("start_timestamp", d.start_timestamp);
    p.time_step = j.value("time_step", d.time_step);
}

MarketFrame synth_series(SynthKind kind, std::size_t T, std::size_t K, std::uint64_t seed,
                         const SynthParams& params) {
    if (T < 2 || K < 1) {
        fail(ErrorCode::InvalidArgument, "synthetic series needs T >= 2 and K >= 1");
    }
    if (!(params.base_price > 0.0)) {
        fail(ErrorCode::NonPositivePath, "base price must be positive");
    }
    if (kind != SynthKind::gbm) {
        if (params.amplitude < 0.0 || params.amplitude >= params.base_price) {
            fail(ErrorCode::NonPositivePath, "amplitude must lie in [0, base_price)");
        }
        if (!(params.period > 0.0)) {
            fail(ErrorCode::InvalidArgument, "period must be positive");
        }
    }
    if (params.time_step <= 0) {
        fail(ErrorCode::InvalidArgument, "time step must be positive");
    }

    Matrix close(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(K));
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < K; ++k) {
        std::string id = std::to_string(k);
        ids.push_back("SYN" + std::string(id.size() < 3 ? 3 - id.size() : 0, '0') + id);
        Rng rng = make_rng(seed, k);
        const auto col = static_cast<Eigen::Index>(k);
        const double phase = params.phase + (params.random_phase ? uniform(rng, 0.0, params.period) : 0.0);
        double w = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double tt = static_cast<double>(t);
            double p = 0.0;
            switch (kind) {
            case SynthKind::gbm:
                if (t > 0) {
                    w += standard_normal(rng);
                }
                p = params.base_price * std::exp(params.drift * tt + params.volatility * w);
                break;
            case SynthKind::sine:
                p = params.base_price +
                    params.amplitude * std::sin(2.0 * std::numbers::pi * (tt + phase) / params.period);
                break;
            case SynthKind::sawtooth: {
                const double x = (tt + phase) / params.period;
                p = params.base_price + params.amplitude * (2.0 * (x - std::floor(x)) - 1.0);
                break;
            }
            }
            if (!(p > 0.0) || !std::isfinite(p)) {
                fail(ErrorCode::NonPositivePath, "synthetic path left the positive reals");
            }
            close(static_cast<Eigen::Index>(t), col) = p;
        }
    }
    std::vector<std::int64_t> ts(T);
    for (std::size_t t = 0; t < T; ++t) {
        ts[t] = params.start_timestamp + static_cast<std::int64_t>(t) * params.time_step;
    }
    return make_close_only_frame(std::move(ts), std::move(ids), std::move(close));
}

}  // namespace vecfin::data
