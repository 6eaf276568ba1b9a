#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/simulate.hpp"
#include "vecfin/data/market_frame.hpp"
#include "vecfin/env/vec_env.hpp"

namespace vecfin::ensemble {

enum class Rule { weighted_average, majority_vote };

Rule parse_rule(const std::string& name);
std::string to_string(Rule rule);

struct EnsembleSpec {
    std::vector<std::shared_ptr<const agents::Agent>> members;
    Rule rule = Rule::weighted_average;
    /// Members whose validation Sharpe is below this are dropped.
    double discard_threshold = 0.0;
    double temperature = 1.0;

    void validate() const;
};

struct AgentWeights {
    /// One entry per member; discarded members hold 0.
    std::vector<double> weights;
    std::vector<std::uint8_t> retained;
    std::vector<double> sharpes;
};

/// Softmax of sharpe / temperature over members at or above the threshold.
/// NaN Sharpes count as 0. If every member is dropped the best one is kept
/// alone (lowest index on ties).
AgentWeights weights_from_sharpes(std::span<const double> sharpes, double discard_threshold,
                                  double temperature);

/// Equal weights over every member.
AgentWeights uniform_weights(std::size_t members);

/// Runs each member greedily over `val_frame`, scores it by Sharpe and
/// weights the ensemble from those scores.
AgentWeights validate_and_weight(const EnsembleSpec& spec, const data::MarketFrame& val_frame,
                                 const env::EnvConfig& config, double periods_per_year = 252.0);

/// Discrete members: argmax of sum_i w_i pi_i(.|s), as N x 1 indices.
/// Continuous members: clamp(sum_i w_i mu_i(s), -1, 1), N x K.
Matrix weighted_policy_action(std::span<const std::shared_ptr<const agents::Agent>> members,
                              const AgentWeights& weights, const env::BatchState& state);

/// Plurality winner among vote indices. Ties go to the action whose value is
/// closest to 0, then to the lowest index.
std::size_t majority_vote(std::span<const std::size_t> votes, std::span<const int> action_values);

/// P(X > n/2) for X ~ Binomial(n, p), summed in log space.
double condorcet_probability(std::size_t n, double p);

class EnsemblePolicy final : public backtest::TradingPolicy {
public:
    EnsemblePolicy(EnsembleSpec spec, AgentWeights weights);

    const EnsembleSpec& spec() const { return spec_; }
    const AgentWeights& weights() const { return weights_; }
    Matrix act(const env::BatchState& state) const override;

private:
    EnsembleSpec spec_;
    AgentWeights weights_;
};

/// Named ensemble sizes: count per agent kind for ensemble-1/2/3.
struct Preset {
    std::string name;
    Rule rule = Rule::weighted_average;
    std::vector<agents::AgentKind> kinds;
    std::size_t per_kind = 1;
};

/// task is "stock" (ppo, sac, ddpg at 1/5/10) or "crypto" (dqn, double_dqn,
/// dueling_dqn at 1/3/10, majority vote).
Preset preset(const std::string& name, const std::string& task);
std::vector<std::string> preset_names();

}  // namespace vecfin::ensemble
