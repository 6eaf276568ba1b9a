#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecfin/common/matrix.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/market_frame.hpp"

namespace vecfin::env {

enum class ActionMode { continuous, discrete };

struct EnvConfig {
    double initial_cash = 1e6;
    /// Proportional fee on executed notional, in basis points.
    double cost_bps = 0.0;
    /// Adverse execution price shift, in basis points.
    double slippage_bps = 0.0;
    /// Continuous mode: shares per asset per step at |action| = 1.
    int max_trade = 100;
    /// Discrete mode: shares per lot.
    double lot_size = 1.0;
    ActionMode mode = ActionMode::continuous;
    /// Discrete mode: lot multiples selectable per step, sorted and symmetric.
    std::vector<int> discrete_actions{-1, 0, 1};
    /// Reserved; enabling either one is rejected by validate().
    std::optional<double> turbulence_threshold;
    std::optional<double> stop_loss;

    void validate() const;
    /// Trade granularity in shares.
    double unit() const { return mode == ActionMode::continuous ? 1.0 : lot_size; }
    /// Divisor for holdings in the encoded state.
    double holding_scale() const {
        return mode == ActionMode::continuous ? static_cast<double>(max_trade) : lot_size;
    }
    std::size_t num_discrete_actions() const { return discrete_actions.size(); }
    /// Index of the zero action in discrete_actions.
    std::size_t hold_index() const;
};

void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

/// N parallel sub-environments. Row i of every matrix belongs to env i.
struct BatchState {
    std::size_t num_envs = 0;
    std::size_t num_assets = 0;
    std::size_t num_features = 0;
    std::vector<double> cash;
    Matrix prices;
    Matrix holdings;
    /// Flat N x K x I.
    std::vector<double> features;
    std::vector<std::size_t> step_index;
    /// One stream per env, seeded from (seed, i). The env itself draws
    /// nothing; agents use these for per-env exploration.
    std::vector<Rng> rngs;

    std::size_t state_dim() const { return (num_features + 2) * num_assets + 1; }
    double wealth(std::size_t i) const;
    std::span<const double> prices_of(std::size_t i) const {
        return {prices.data() + i * num_assets, num_assets};
    }
    std::span<const double> holdings_of(std::size_t i) const {
        return {holdings.data() + i * num_assets, num_assets};
    }
    /// Copies env i out as a batch of one (RNG included).
    BatchState env(std::size_t i) const;
};

bool operator==(const BatchState& a, const BatchState& b);

struct StepOutput {
    std::vector<double> rewards;
    std::vector<std::uint8_t> done;
    /// Filled share deltas after clipping, N x K.
    Matrix executed;
    /// Execution price per fill (0 where nothing traded), N x K.
    Matrix exec_prices;
    /// Fee charged per fill, N x K.
    Matrix fees;
};

/// Portfolio at one instant: balance, marks, positions.
struct PortfolioView {
    double cash = 0.0;
    std::span<const double> prices;
    std::span<const double> holdings;
};

/// v = b + p . h
double total_value(const PortfolioView& view);

/// v_{t+1} - v_t. `executed` is carried for the signature only; the value
/// change already reflects fills and fees.
double reward(const PortfolioView& prev, std::span<const double> executed, const PortfolioView& next);

BatchState reset(const data::MarketFrame& frame, const EnvConfig& config, std::size_t num_envs,
                 std::uint64_t seed);

/// Returns env i to frame row 0 with initial cash; its RNG stream continues.
void reset_env(BatchState& state, std::size_t i, const data::MarketFrame& frame,
               const EnvConfig& config);

/// Raw agent output to share deltas. Continuous rows are clamped to [-1, 1]
/// and rounded half away from zero; discrete entries are indices.
Matrix decode_action(const Matrix& raw, const EnvConfig& config);

/// Advances every env one row in place; `state` becomes the next state.
void step(BatchState& state, const Matrix& actions, const data::MarketFrame& frame,
          const EnvConfig& config, StepOutput& out, ThreadPool* pool = nullptr);
StepOutput step(BatchState& state, const Matrix& actions, const data::MarketFrame& frame,
                const EnvConfig& config, ThreadPool* pool = nullptr);

/// Scaling applied by encode_state. Features named macd* or sma* are
/// price-like and divided by the asset's anchor price; rsi, cci and dx are
/// divided by 100; anything else passes through.
struct StateNormalizer {
    double cash_scale = 1.0;
    std::vector<double> price_anchor;
    double holding_scale = 1.0;
    std::vector<double> feature_divisor;
    std::vector<std::uint8_t> feature_price_relative;

    static StateNormalizer for_frame(const data::MarketFrame& frame, const EnvConfig& config);
    bool operator==(const StateNormalizer&) const = default;
};

void to_json(nlohmann::json& j, const StateNormalizer& n);
void from_json(const nlohmann::json& j, StateNormalizer& n);

/// N x D_s rows laid out [cash, prices(K), holdings(K), features(K*I)].
Matrix encode_state(const BatchState& state, const StateNormalizer& normalizer);
void encode_state_into(const BatchState& state, const StateNormalizer& normalizer, Matrix& out);

/// Owns a frame share, a config and the batch; convenience over the free
/// functions above.
class VecEnv {
public:
    VecEnv(std::shared_ptr<const data::MarketFrame> frame, EnvConfig config, std::size_t num_envs,
           std::uint64_t seed, ThreadPool* pool = nullptr);

    const data::MarketFrame& frame() const { return *frame_; }
    std::shared_ptr<const data::MarketFrame> frame_ptr() const { return frame_; }
    const EnvConfig& config() const { return config_; }
    const BatchState& state() const { return state_; }
    BatchState& state() { return state_; }
    std::size_t num_envs() const { return state_.num_envs; }
    std::size_t state_dim() const { return state_.state_dim(); }
    std::size_t episode_length() const { return frame_->num_steps() - 1; }

    void reset();
    const StepOutput& step(const Matrix& actions);
    /// Resets every env flagged done in the last step.
    void reset_done();

private:
    std::shared_ptr<const data::MarketFrame> frame_;
    EnvConfig config_;
    std::uint64_t seed_;
    ThreadPool* pool_;
    BatchState state_;
    StepOutput last_;
};

}  // namespace vecfin::env
