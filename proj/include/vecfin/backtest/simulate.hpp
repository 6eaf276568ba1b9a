#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vecfin/backtest/metrics.hpp"
#include "vecfin/common/matrix.hpp"
#include "vecfin/data/market_frame.hpp"
#include "vecfin/env/vec_env.hpp"

namespace vecfin::agents {
class Agent;
}

namespace vecfin::backtest {

/// Anything that maps a batch state to raw env actions without exploration.
class TradingPolicy {
public:
    virtual ~TradingPolicy() = default;
    virtual Matrix act(const env::BatchState& state) const = 0;
};

/// Greedy actions of one agent.
class AgentPolicy final : public TradingPolicy {
public:
    explicit AgentPolicy(std::shared_ptr<const agents::Agent> agent);
    Matrix act(const env::BatchState& state) const override;

private:
    std::shared_ptr<const agents::Agent> agent_;
};

/// Never trades.
class HoldPolicy final : public TradingPolicy {
public:
    explicit HoldPolicy(env::EnvConfig config) : config_(std::move(config)) {}
    Matrix act(const env::BatchState& state) const override;

private:
    env::EnvConfig config_;
};

struct PolicyRun {
    EquityCurve curve;
    TradeLog trades;
};

/// Trades one env through every row of `frame`. Point t of the curve is the
/// wealth at row t; at the last row all holdings are sold at the close (with
/// slippage and fees), and the last point is the post-liquidation cash.
PolicyRun run_policy(const TradingPolicy& policy, const data::MarketFrame& frame,
                     const env::EnvConfig& config, bool liquidate = true);

/// Invests initial_cash equally across assets at row 0 (fractional shares,
/// entry slippage and fees) and holds.
EquityCurve buy_and_hold_baseline(const data::MarketFrame& frame, const env::EnvConfig& config);

}  // namespace vecfin::backtest
