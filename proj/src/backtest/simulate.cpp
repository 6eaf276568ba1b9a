#include "vecfin/backtest/simulate.hpp"

#include "vecfin/agents/agent.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::backtest {

namespace {

constexpr double kBps = 1e-4;

void record_fills(TradeLog& log, const env::StepOutput& out, std::int64_t timestamp) {
    const auto K = out.executed.cols();
    for (Eigen::Index k = 0; k < K; ++k) {
        const double q = out.executed(0, k);
        if (q != 0.0) {
            log.record({timestamp, static_cast<std::size_t>(k), q, out.exec_prices(0, k),
                        out.fees(0, k)});
        }
    }
}

}  // namespace

AgentPolicy::AgentPolicy(std::shared_ptr<const agents::Agent> agent) : agent_(std::move(agent)) {
    if (!agent_) {
        fail(ErrorCode::InvalidArgument, "agent policy needs an agent");
    }
}

Matrix AgentPolicy::act(const env::BatchState& state) const {
    return agent_->greedy(agent_->encode(state));
}

Matrix HoldPolicy::act(const env::BatchState& state) const {
    const auto N = static_cast<Eigen::Index>(state.num_envs);
    if (config_.mode == env::ActionMode::discrete) {
        return Matrix::Constant(N, static_cast<Eigen::Index>(state.num_assets),
                                static_cast<double>(config_.hold_index()));
    }
    return Matrix::Zero(N, static_cast<Eigen::Index>(state.num_assets));
}

PolicyRun run_policy(const TradingPolicy& policy, const data::MarketFrame& frame,
                     const env::EnvConfig& config, bool liquidate) {
    const std::size_t T = frame.num_steps();
    if (T < 2) {
        fail(ErrorCode::WindowTooShort, "a policy run needs at least two rows");
    }
    PolicyRun run;
    env::BatchState state = env::reset(frame, config, 1, 0);
    env::StepOutput out;
    run.curve.append(frame.timestamps[0], state.wealth(0));
    for (std::size_t t = 0; t + 1 < T; ++t) {
        const Matrix raw = policy.act(state);
        env::step(state, raw, frame, config, out);
        record_fills(run.trades, out, frame.timestamps[t]);
        run.curve.append(frame.timestamps[t + 1], state.wealth(0));
    }
    if (liquidate) {
        const double slip = config.slippage_bps * kBps;
        const double cost = config.cost_bps * kBps;
        double cash = state.cash[0];
        for (std::size_t k = 0; k < state.num_assets; ++k) {
            const double q = state.holdings(0, static_cast<Eigen::Index>(k));
            if (q <= 0.0) {
                continue;
            }
            const double px = state.prices(0, static_cast<Eigen::Index>(k)) * (1.0 - slip);
            const double notional = q * px;
            const double fee = notional * cost;
            cash += notional - fee;
            run.trades.record({frame.timestamps[T - 1], k, -q, px, fee});
        }
        run.curve.wealth.back() = cash;
    }
    return run;
}

EquityCurve buy_and_hold_baseline(const data::MarketFrame& frame, const env::EnvConfig& config) {
    const std::size_t T = frame.num_steps();
    const std::size_t K = frame.num_assets();
    if (T < 1 || K < 1) {
        fail(ErrorCode::InvalidArgument, "buy-and-hold needs a nonempty frame");
    }
    const double slip = config.slippage_bps * kBps;
    const double cost = config.cost_bps * kBps;
    const double budget = config.initial_cash / static_cast<double>(K);
    std::vector<double> shares(K);
    for (std::size_t k = 0; k < K; ++k) {
        shares[k] = budget / (frame.price(0, k) * (1.0 + slip) * (1.0 + cost));
    }
    EquityCurve curve;
    for (std::size_t t = 0; t < T; ++t) {
        double v = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            v += shares[k] * frame.price(t, k);
        }
        curve.append(frame.timestamps[t], v);
    }
    return curve;
}

}  // namespace vecfin::backtest
