#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "vecfin/data/market_frame.hpp"

namespace vecfin::data {

enum class SynthKind { gbm, sine, sawtooth };

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

struct SynthParams {
    double base_price = 100.0;
    /// gbm: log drift per step.
    double drift = 0.0;
    /// gbm: log volatility per step.
    double volatility = 0.01;
    /// sine/sawtooth: absolute price amplitude.
    double amplitude = 10.0;
    /// sine/sawtooth: period in steps.
    double period = 20.0;
    /// sine/sawtooth: phase offset in steps.
    double phase = 0.0;
    /// Draw a per-asset phase offset in [0, period) from the seed.
    bool random_phase = false;
    std::int64_t start_timestamp = 0;
    std::int64_t time_step = 86400;
};

void to_json(nlohmann::json& j, const SynthParams& p);
void from_json(const nlohmann::json& j, SynthParams& p);

/// Deterministic synthetic close-only frame. Asset ids are SYN000, SYN001, ...
MarketFrame synth_series(SynthKind kind, std::size_t T, std::size_t K, std::uint64_t seed,
                         const SynthParams& params = {});

}  // namespace vecfin::data
