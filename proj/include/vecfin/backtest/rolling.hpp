#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/metrics.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/market_frame.hpp"
#include "vecfin/data/windows.hpp"
#include "vecfin/ensemble/ensemble.hpp"

namespace vecfin::backtest {

struct MemberSpec {
    std::string name;
    agents::AgentConfig config;
    std::uint64_t seed = 0;
};

struct EnsembleVariant {
    std::string name;
    ensemble::Rule rule = ensemble::Rule::weighted_average;
    /// Indices into RollingConfig::members.
    std::vector<std::size_t> members;
    double discard_threshold = 0.0;
    double temperature = 1.0;
};

struct RollingConfig {
    env::EnvConfig env;
    agents::TrainSchedule schedule;
    std::vector<MemberSpec> members;
    std::vector<EnsembleVariant> ensembles;
    std::uint64_t master_seed = 0;
    /// Price scaling drawn per member and window; 0 disables it.
    double augment_magnitude = 0.01;
    double rf = 0.0;
    double periods_per_year = 252.0;
    /// Emit each member as its own strategy.
    bool report_members = true;
    /// Emit buy-and-hold and hold over the whole evaluation span.
    bool baselines = true;
    /// When set, these agents are used in every window and no training runs.
    std::vector<std::shared_ptr<const agents::Agent>> pretrained;
    /// Called after each window's members are trained.
    std::function<void(std::size_t window, std::span<const std::shared_ptr<agents::Agent>>,
                       const std::vector<agents::EpochLog>&)>
        on_trained;
};

struct StrategyResult {
    std::string name;
    EquityCurve curve;
    TradeLog trades;
    MetricsReport metrics;
    /// Ensembles only: weights used in each window.
    std::vector<ensemble::AgentWeights> window_weights;
};

/// Per window: members train on the train range (each on its own price
/// perturbation of rows [0, train.end)), weighted ensembles are gated and
/// weighted on the val range, and every strategy trades the test range
/// starting from the close before it. Wealth carries across windows and
/// positions are liquidated at each window's last test row. Point 0 of each
/// curve is the opening mark; the remaining points tile the test rows.
std::vector<StrategyResult> run_rolling(const data::MarketFrame& frame,
                                        const data::WindowSchedule& schedule,
                                        const RollingConfig& config, ThreadPool* pool = nullptr);

/// Seed used for member m in window w.
std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t member_seed, std::size_t window);

}  // namespace vecfin::backtest
