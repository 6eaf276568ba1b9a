#include "vecfin/env/vec_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vecfin/common/error.hpp"

namespace vecfin::env {

namespace {

constexpr double kBps = 1e-4;

void load_row(BatchState& s, std::size_t i, const data::MarketFrame& frame, std::size_t t) {
    const std::size_t K = s.num_assets;
    const std::size_t I = s.num_features;
    for (std::size_t k = 0; k < K; ++k) {
        s.prices.data()[i * K + k] = frame.price(t, k);
    }
    if (K * I > 0) {
        std::copy_n(frame.feature_row(t), K * I, s.features.data() + i * K * I);
    }
}

double decode_one(double raw, const EnvConfig& config) {
    if (!std::isfinite(raw)) {
        fail(ErrorCode::NonFiniteAction, "action is not finite");
    }
    if (config.mode == ActionMode::continuous) {
        const double a = std::clamp(raw, -1.0, 1.0);
        return std::round(a * static_cast<double>(config.max_trade));
    }
    const double idx = std::round(raw);
    if (idx != raw || idx < 0.0 || idx >= static_cast<double>(config.discrete_actions.size())) {
        fail(ErrorCode::IndexOutOfRange, "discrete action index " + std::to_string(raw) +
                                             " outside [0, " +
                                             std::to_string(config.discrete_actions.size()) + ")");
    }
    return static_cast<double>(config.discrete_actions[static_cast<std::size_t>(idx)]) *
           config.lot_size;
}

void step_one(BatchState& s, std::size_t i, const double* raw, const data::MarketFrame& frame,
              const EnvConfig& config, StepOutput& out) {
    const std::size_t K = s.num_assets;
    const std::size_t T = frame.num_steps();
    if (s.step_index[i] + 1 >= T) {
        fail(ErrorCode::EpisodeFinished, "env " + std::to_string(i) + " already finished");
    }
    double* price = s.prices.data() + i * K;
    double* hold = s.holdings.data() + i * K;
    double* executed = out.executed.data() + i * K;
    double* exec_price = out.exec_prices.data() + i * K;
    double* fee = out.fees.data() + i * K;
    const double cost = config.cost_bps * kBps;
    const double slip = config.slippage_bps * kBps;
    const double unit = config.unit();

    // Decode everything first so a bad action leaves the env untouched.
    for (std::size_t k = 0; k < K; ++k) {
        executed[k] = decode_one(raw[k], config);
        exec_price[k] = 0.0;
        fee[k] = 0.0;
    }

    const double v_prev =
        total_value({s.cash[i], {price, K}, {hold, K}});
    double cash = s.cash[i];

    for (std::size_t k = 0; k < K; ++k) {
        if (executed[k] >= 0.0) {
            continue;
        }
        const double q = std::min(-executed[k], hold[k]);
        executed[k] = -q;
        if (q <= 0.0) {
            executed[k] = 0.0;
            continue;
        }
        const double px = price[k] * (1.0 - slip);
        const double notional = q * px;
        const double f = notional * cost;
        cash += notional - f;
        hold[k] = q == hold[k] ? 0.0 : hold[k] - q;
        exec_price[k] = px;
        fee[k] = f;
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (executed[k] <= 0.0) {
            continue;
        }
        const double px = price[k] * (1.0 + slip);
        const double per_unit = unit * px * (1.0 + cost);
        const double want_units = std::round(executed[k] / unit);
        double units = std::min(want_units, std::floor(cash / per_unit));
        double notional = units * unit * px;
        double f = notional * cost;
        while (units > 0.0 && notional + f > cash) {
            units -= 1.0;
            notional = units * unit * px;
            f = notional * cost;
        }
        if (units <= 0.0) {
            executed[k] = 0.0;
            continue;
        }
        const double q = units * unit;
        executed[k] = q;
        cash -= notional + f;
        hold[k] += q;
        exec_price[k] = px;
        fee[k] = f;
    }
    s.cash[i] = cash;

    const std::size_t t = ++s.step_index[i];
    load_row(s, i, frame, t);
    out.rewards[i] = total_value({cash, {price, K}, {hold, K}}) - v_prev;
    out.done[i] = t + 1 == T ? 1 : 0;
}

}  // namespace

void EnvConfig::validate() const {
    if (!(initial_cash > 0.0)) {
        fail(ErrorCode::ConfigError, "initial_cash must be > 0");
    }
    if (cost_bps < 0.0 || cost_bps >= 10000.0 || slippage_bps < 0.0 || slippage_bps >= 10000.0) {
        fail(ErrorCode::ConfigError, "cost_bps and slippage_bps must lie in [0, 10000)");
    }
    if (turbulence_threshold || stop_loss) {
        fail(ErrorCode::Unsupported, "turbulence threshold and stop-loss are not implemented");
    }
    if (mode == ActionMode::continuous) {
        if (max_trade < 1) {
            fail(ErrorCode::ConfigError, "max_trade must be >= 1");
        }
        return;
    }
    if (!(lot_size > 0.0)) {
        fail(ErrorCode::ConfigError, "lot_size must be > 0");
    }
    const auto& a = discrete_actions;
    if (a.empty() || a.size() % 2 == 0 || !std::is_sorted(a.begin(), a.end()) ||
        std::adjacent_find(a.begin(), a.end()) != a.end()) {
        fail(ErrorCode::ConfigError, "discrete_actions must be an odd-length strictly sorted list");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != -a[a.size() - 1 - i]) {
            fail(ErrorCode::ConfigError, "discrete_actions must be symmetric around 0");
        }
    }
}

std::size_t EnvConfig::hold_index() const {
    auto it = std::find(discrete_actions.begin(), discrete_actions.end(), 0);
    if (it == discrete_actions.end()) {
        fail(ErrorCode::ConfigError, "discrete_actions has no zero action");
    }
    return static_cast<std::size_t>(it - discrete_actions.begin());
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
    j = {{"initial_cash", c.initial_cash},
         {"cost_bps", c.cost_bps},
         {"slippage_bps", c.slippage_bps},
         {"max_trade", c.max_trade},
         {"lot_size", c.lot_size},
         {"mode", c.mode == ActionMode::continuous ? "continuous" : "discrete"},
         {"discrete_actions", c.discrete_actions}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
    const EnvConfig d;
    c.initial_cash = j.value("initial_cash", d.initial_cash);
    c.cost_bps = j.value("cost_bps", d.cost_bps);
    c.slippage_bps = j.value("slippage_bps", d.slippage_bps);
    c.max_trade = j.value("max_trade", d.max_trade);
    c.lot_size = j.value("lot_size", d.lot_size);
    const std::string mode = j.value("mode", std::string("continuous"));
    if (mode == "continuous") {
        c.mode = ActionMode::continuous;
    } else if (mode == "discrete") {
        c.mode = ActionMode::discrete;
    } else {
        fail(ErrorCode::ConfigError, "env mode must be continuous or discrete, got '" + mode + "'");
    }
    c.discrete_actions = j.value("discrete_actions", d.discrete_actions);
    if (j.contains("turbulence_threshold") && !j.at("turbulence_threshold").is_null()) {
        c.turbulence_threshold = j.at("turbulence_threshold").get<double>();
    }
    if (j.contains("stop_loss") && !j.at("stop_loss").is_null()) {
        c.stop_loss = j.at("stop_loss").get<double>();
    }
}

double BatchState::wealth(std::size_t i) const {
    return total_value({cash[i], prices_of(i), holdings_of(i)});
}

BatchState BatchState::env(std::size_t i) const {
    BatchState one;
    one.num_envs = 1;
    one.num_assets = num_assets;
    one.num_features = num_features;
    one.cash = {cash[i]};
    one.prices = prices.row(static_cast<Eigen::Index>(i));
    one.holdings = holdings.row(static_cast<Eigen::Index>(i));
    const std::size_t w = num_assets * num_features;
    one.features.assign(features.begin() + static_cast<std::ptrdiff_t>(i * w),
                        features.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
    one.step_index = {step_index[i]};
    one.rngs = {rngs[i]};
    return one;
}

bool operator==(const BatchState& a, const BatchState& b) {
    return a.num_envs == b.num_envs && a.num_assets == b.num_assets &&
           a.num_features == b.num_features && a.cash == b.cash && a.prices == b.prices &&
           a.holdings == b.holdings && a.features == b.features && a.step_index == b.step_index &&
           a.rngs == b.rngs;
}

double total_value(const PortfolioView& view) {
    double v = view.cash;
    for (std::size_t k = 0; k < view.prices.size(); ++k) {
        v += view.prices[k] * view.holdings[k];
    }
    return v;
}

double reward(const PortfolioView& prev, std::span<const double> /*executed*/,
              const PortfolioView& next) {
    return total_value(next) - total_value(prev);
}

BatchState reset(const data::MarketFrame& frame, const EnvConfig& config, std::size_t num_envs,
                 std::uint64_t seed) {
    config.validate();
    if (num_envs < 1) {
        fail(ErrorCode::InvalidArgument, "need at least one environment");
    }
    if (frame.num_steps() < 2) {
        fail(ErrorCode::InsufficientData, "an episode needs at least two frame rows");
    }
    BatchState s;
    s.num_envs = num_envs;
    s.num_assets = frame.num_assets();
    s.num_features = frame.num_features();
    const auto N = static_cast<Eigen::Index>(num_envs);
    const auto K = static_cast<Eigen::Index>(s.num_assets);
    s.cash.assign(num_envs, config.initial_cash);
    s.prices.resize(N, K);
    s.holdings = Matrix::Zero(N, K);
    s.features.assign(num_envs * s.num_assets * s.num_features, 0.0);
    s.step_index.assign(num_envs, 0);
    s.rngs.reserve(num_envs);
    for (std::size_t i = 0; i < num_envs; ++i) {
        s.rngs.push_back(make_rng(seed, i));
        load_row(s, i, frame, 0);
    }
    return s;
}

void reset_env(BatchState& state, std::size_t i, const data::MarketFrame& frame,
               const EnvConfig& config) {
    state.cash[i] = config.initial_cash;
    state.holdings.row(static_cast<Eigen::Index>(i)).setZero();
    state.step_index[i] = 0;
    load_row(state, i, frame, 0);
}

Matrix decode_action(const Matrix& raw, const EnvConfig& config) {
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        out.data()[i] = decode_one(raw.data()[i], config);
    }
    return out;
}

void step(BatchState& state, const Matrix& actions, const data::MarketFrame& frame,
          const EnvConfig& config, StepOutput& out, ThreadPool* pool) {
    const std::size_t N = state.num_envs;
    const std::size_t K = state.num_assets;
    if (static_cast<std::size_t>(actions.rows()) != N ||
        static_cast<std::size_t>(actions.cols()) != K) {
        fail(ErrorCode::ShapeMismatch, "action matrix must be N x K");
    }
    if (frame.num_assets() != K || frame.num_features() != state.num_features) {
        fail(ErrorCode::ShapeMismatch, "frame does not match batch state");
    }
    out.rewards.resize(N);
    out.done.resize(N);
    out.executed.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    out.exec_prices.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    out.fees.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    parallel_for(pool, N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            step_one(state, i, actions.data() + i * K, frame, config, out);
        }
    });
}

StepOutput step(BatchState& state, const Matrix& actions, const data::MarketFrame& frame,
                const EnvConfig& config, ThreadPool* pool) {
    StepOutput out;
    step(state, actions, frame, config, out, pool);
    return out;
}

StateNormalizer StateNormalizer::for_frame(const data::MarketFrame& frame, const EnvConfig& config) {
    StateNormalizer n;
    n.cash_scale = config.initial_cash;
    n.holding_scale = config.holding_scale();
    n.price_anchor.resize(frame.num_assets());
    for (std::size_t k = 0; k < frame.num_assets(); ++k) {
        n.price_anchor[k] = frame.price(0, k);
    }
    for (const auto& name : frame.feature_names) {
        const bool price_like = name.rfind("macd", 0) == 0 || name.rfind("sma", 0) == 0;
        const bool percent = name.rfind("rsi", 0) == 0 || name.rfind("cci", 0) == 0 ||
                             name.rfind("dx", 0) == 0;
        n.feature_price_relative.push_back(price_like ? 1 : 0);
        n.feature_divisor.push_back(percent ? 100.0 : 1.0);
    }
    return n;
}

void to_json(nlohmann::json& j, const StateNormalizer& n) {
    j = {{"cash_scale", n.cash_scale},
         {"price_anchor", n.price_anchor},
         {"holding_scale", n.holding_scale},
         {"feature_divisor", n.feature_divisor},
         {"feature_price_relative", n.feature_price_relative}};
}

void from_json(const nlohmann::json& j, StateNormalizer& n) {
    n.cash_scale = j.at("cash_scale").get<double>();
    n.price_anchor = j.at("price_anchor").get<std::vector<double>>();
    n.holding_scale = j.at("holding_scale").get<double>();
    n.feature_divisor = j.at("feature_divisor").get<std::vector<double>>();
    n.feature_price_relative = j.at("feature_price_relative").get<std::vector<std::uint8_t>>();
}

void encode_state_into(const BatchState& s, const StateNormalizer& n, Matrix& out) {
    const std::size_t K = s.num_assets;
    const std::size_t I = s.num_features;
    const std::size_t D = s.state_dim();
    if (n.price_anchor.size() != K || n.feature_divisor.size() != I ||
        n.feature_price_relative.size() != I) {
        fail(ErrorCode::ShapeMismatch, "normalizer does not match state dimensions");
    }
    out.resize(static_cast<Eigen::Index>(s.num_envs), static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < s.num_envs; ++i) {
        double* row = out.data() + i * D;
        row[0] = s.cash[i] / n.cash_scale;
        const double* p = s.prices.data() + i * K;
        const double* h = s.holdings.data() + i * K;
        const double* f = s.features.data() + i * K * I;
        for (std::size_t k = 0; k < K; ++k) {
            row[1 + k] = p[k] / n.price_anchor[k];
            row[1 + K + k] = h[k] / n.holding_scale;
            for (std::size_t j = 0; j < I; ++j) {
                double div = n.feature_divisor[j];
                if (n.feature_price_relative[j]) {
                    div *= n.price_anchor[k];
                }
                row[1 + 2 * K + k * I + j] = f[k * I + j] / div;
            }
        }
    }
}

Matrix encode_state(const BatchState& state, const StateNormalizer& normalizer) {
    Matrix out;
    encode_state_into(state, normalizer, out);
    return out;
}

VecEnv::VecEnv(std::shared_ptr<const data::MarketFrame> frame, EnvConfig config,
               std::size_t num_envs, std::uint64_t seed, ThreadPool* pool)
    : frame_(std::move(frame)), config_(std::move(config)), seed_(seed), pool_(pool) {
    state_ = env::reset(*frame_, config_, num_envs, seed_);
}

void VecEnv::reset() { state_ = env::reset(*frame_, config_, state_.num_envs, seed_); }

const StepOutput& VecEnv::step(const Matrix& actions) {
    env::step(state_, actions, *frame_, config_, last_, pool_);
    return last_;
}

void VecEnv::reset_done() {
    for (std::size_t i = 0; i < last_.done.size(); ++i) {
        if (last_.done[i]) {
            reset_env(state_, i, *frame_, config_);
        }
    }
}

}  // namespace vecfin::env
