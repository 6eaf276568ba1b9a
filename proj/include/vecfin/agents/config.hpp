#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecfin/nn/mlp.hpp"

namespace vecfin::agents {

enum class AgentKind { dqn, double_dqn, dueling_dqn, ppo, ddpg, sac };

AgentKind parse_agent_kind(const std::string& name);
std::string to_string(AgentKind kind);
/// DQN family acts on discrete indices; PPO, DDPG and SAC emit [-1, 1]^K.
bool is_discrete(AgentKind kind);

struct AgentConfig {
    AgentKind kind = AgentKind::dqn;
    double gamma = 0.99;
    double lr = 3e-4;
    std::size_t batch_size = 64;
    std::vector<std::size_t> hidden{64, 32};
    nn::Activation activation = nn::Activation::relu;
    /// Multiplies env rewards before learning. 0 selects 100 / initial_cash.
    double reward_scale = 0.0;
    double max_grad_norm = 10.0;
    /// Weight of the KL diversity term against peers.
    double diversity_lambda = 0.0;

    // DQN family
    double epsilon = 0.1;
    std::size_t target_sync = 100;

    // off-policy agents
    std::size_t replay_capacity = 100000;
    /// Gradient steps per epoch; 0 means rollout_steps * num_envs / batch_size.
    std::size_t updates_per_epoch = 0;

    // PPO
    double clip_ratio = 0.2;
    double gae_lambda = 0.95;
    std::size_t ppo_epochs = 10;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double init_log_std = -0.5;

    // DDPG and SAC
    double tau = 0.005;
    double exploration_noise = 0.1;
    double alpha = 0.2;

    void validate() const;

    /// 64-32 nets, lr 3e-4, batch 64.
    static AgentConfig stock_defaults(AgentKind kind);
    /// 128x3 nets, epsilon 0.005, lr 2e-6, batch 512.
    static AgentConfig crypto_defaults(AgentKind kind);
};

void to_json(nlohmann::json& j, const AgentConfig& c);
/// Missing keys keep the values already in `c`.
void from_json(const nlohmann::json& j, AgentConfig& c);

/// Outer training loop shape.
struct TrainSchedule {
    std::size_t epochs = 50;
    /// Env steps collected per epoch in every env.
    std::size_t rollout_steps = 64;
    std::size_t num_envs = 8;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainSchedule& s);
void from_json(const nlohmann::json& j, TrainSchedule& s);

}  // namespace vecfin::agents
