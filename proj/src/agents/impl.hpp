#pragma once

#include <optional>

#include "vecfin/agents/agent.hpp"
#include "vecfin/nn/adam.hpp"

namespace vecfin::agents::detail {

/// [a | b] column concatenation.
Matrix hcat(const Matrix& a, const Matrix& b);
/// Adam on net with its own state; skips empty gradient sets.
void apply_adam(nn::Mlp& net, const nn::Gradients& grads, nn::AdamState& state);
nn::AdamState make_adam(const AgentConfig& config);
std::vector<std::size_t> layer_sizes(std::size_t in, std::span<const std::size_t> hidden,
                                     std::size_t out);
void check_loss(double loss, const char* what);

class DqnAgent final : public Agent {
public:
    DqnAgent(AgentConfig config, AgentSpace space, std::uint64_t seed);

    Matrix greedy(const Matrix& encoded) const override;
    Decision explore(const Matrix& encoded, std::span<Rng> rngs) const override;
    PolicyOutputs policy_outputs(const Matrix& encoded) const override;
    void observe(const SampleBuffer& buffer) override;
    UpdateStats update(std::span<const Agent* const> peers) override;
    std::unique_ptr<Agent> snapshot() const override;
    std::vector<std::string> network_names() const override;
    std::vector<nn::Mlp*> networks() override;

    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }
    QNetwork& online() { return online_; }
    const ReplayBuffer& replay() const { return replay_; }
    std::size_t num_updates() const { return updates_; }
    /// One gradient step on an explicit batch; returns the TD loss.
    double train_on_batch(const TransitionBatch& batch, std::span<const Agent* const> peers,
                          double* diversity = nullptr);

private:
    QNetwork online_;
    QNetwork target_;
    ReplayBuffer replay_;
    nn::AdamState opt_body_;
    nn::AdamState opt_value_;
    nn::AdamState opt_advantage_;
    std::size_t updates_ = 0;
    std::size_t fresh_ = 0;
};

class PpoAgent final : public Agent {
public:
    PpoAgent(AgentConfig config, AgentSpace space, std::uint64_t seed);

    Matrix greedy(const Matrix& encoded) const override;
    Decision explore(const Matrix& encoded, std::span<Rng> rngs) const override;
    PolicyOutputs policy_outputs(const Matrix& encoded) const override;
    Matrix mean_action(const Matrix& encoded) const override;
    void observe(const SampleBuffer& buffer) override;
    UpdateStats update(std::span<const Agent* const> peers) override;
    std::unique_ptr<Agent> snapshot() const override;
    std::vector<std::string> network_names() const override;
    std::vector<nn::Mlp*> networks() override;
    nlohmann::json extra_state() const override;
    void load_extra_state(const nlohmann::json& j) override;

private:
    nn::Mlp actor_;
    nn::Mlp critic_;
    std::vector<double> log_std_;
    nn::AdamState opt_actor_;
    nn::AdamState opt_critic_;
    nn::AdamState opt_log_std_;
    std::optional<SampleBuffer> pending_;
};

class DdpgAgent final : public Agent {
public:
    DdpgAgent(AgentConfig config, AgentSpace space, std::uint64_t seed);

    Matrix greedy(const Matrix& encoded) const override;
    Decision explore(const Matrix& encoded, std::span<Rng> rngs) const override;
    PolicyOutputs policy_outputs(const Matrix& encoded) const override;
    Matrix mean_action(const Matrix& encoded) const override;
    void observe(const SampleBuffer& buffer) override;
    UpdateStats update(std::span<const Agent* const> peers) override;
    std::unique_ptr<Agent> snapshot() const override;
    std::vector<std::string> network_names() const override;
    std::vector<nn::Mlp*> networks() override;

private:
    nn::Mlp actor_;
    nn::Mlp critic_;
    nn::Mlp actor_target_;
    nn::Mlp critic_target_;
    ReplayBuffer replay_;
    nn::AdamState opt_actor_;
    nn::AdamState opt_critic_;
    std::size_t fresh_ = 0;
};

class SacAgent final : public Agent {
public:
    SacAgent(AgentConfig config, AgentSpace space, std::uint64_t seed);

    Matrix greedy(const Matrix& encoded) const override;
    Decision explore(const Matrix& encoded, std::span<Rng> rngs) const override;
    PolicyOutputs policy_outputs(const Matrix& encoded) const override;
    Matrix mean_action(const Matrix& encoded) const override;
    void observe(const SampleBuffer& buffer) override;
    UpdateStats update(std::span<const Agent* const> peers) override;
    std::unique_ptr<Agent> snapshot() const override;
    std::vector<std::string> network_names() const override;
    std::vector<nn::Mlp*> networks() override;

private:
    /// Splits actor output into mean and clamped log-std.
    void heads(const Matrix& out, Matrix& mean, Matrix& log_std) const;

    nn::Mlp actor_;
    nn::Mlp q1_;
    nn::Mlp q2_;
    nn::Mlp q1_target_;
    nn::Mlp q2_target_;
    ReplayBuffer replay_;
    nn::AdamState opt_actor_;
    nn::AdamState opt_q1_;
    nn::AdamState opt_q2_;
    std::size_t fresh_ = 0;
};

/// Std of the Gaussian that stands in for DDPG's deterministic policy.
inline constexpr double kDdpgPolicyStd = 0.1;

}  // namespace vecfin::agents::detail
