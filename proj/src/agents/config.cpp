#include "vecfin/agents/config.hpp"

#include "vecfin/common/error.hpp"

namespace vecfin::agents {

namespace {

struct KindName {
    AgentKind kind;
    const char* name;
};

constexpr KindName kKinds[] = {
    {AgentKind::dqn, "dqn"},   {AgentKind::double_dqn, "double_dqn"},
    {AgentKind::dueling_dqn, "dueling_dqn"}, {AgentKind::ppo, "ppo"},
    {AgentKind::ddpg, "ddpg"}, {AgentKind::sac, "sac"},
};

void require(bool ok, const std::string& what) {
    if (!ok) {
        fail(ErrorCode::ConfigError, what);
    }
}

}  // namespace

AgentKind parse_agent_kind(const std::string& name) {
    for (const auto& k : kKinds) {
        if (name == k.name) {
            return k.kind;
        }
    }
    fail(ErrorCode::ConfigError, "unknown agent kind '" + name + "'");
}

std::string to_string(AgentKind kind) {
    for (const auto& k : kKinds) {
        if (kind == k.kind) {
            return k.name;
        }
    }
    return "unknown";
}

bool is_discrete(AgentKind kind) {
    return kind == AgentKind::dqn || kind == AgentKind::double_dqn ||
           kind == AgentKind::dueling_dqn;
}

void AgentConfig::validate() const {
    require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
    require(lr > 0.0, "lr must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(!hidden.empty(), "at least one hidden layer is required");
    for (auto h : hidden) {
        require(h >= 1, "hidden layer sizes must be >= 1");
    }
    require(reward_scale >= 0.0, "reward_scale must be >= 0");
    require(max_grad_norm >= 0.0, "max_grad_norm must be >= 0");
    require(diversity_lambda >= 0.0, "diversity_lambda must be >= 0");
    require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must be in [0, 1]");
    require(target_sync >= 1, "target_sync must be >= 1");
    require(replay_capacity >= batch_size, "replay_capacity must be >= batch_size");
    require(clip_ratio > 0.0 && clip_ratio < 1.0, "clip_ratio must be in (0, 1)");
    require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must be in [0, 1]");
    require(ppo_epochs >= 1, "ppo_epochs must be >= 1");
    require(entropy_coef >= 0.0 && value_coef >= 0.0, "loss coefficients must be >= 0");
    require(tau >= 0.0 && tau <= 1.0, "tau must be in [0, 1]");
    require(exploration_noise >= 0.0, "exploration_noise must be >= 0");
    require(alpha >= 0.0, "alpha must be >= 0");
}

AgentConfig AgentConfig::stock_defaults(AgentKind kind) {
    AgentConfig c;
    c.kind = kind;
    return c;
}

AgentConfig AgentConfig::crypto_defaults(AgentKind kind) {
    AgentConfig c;
    c.kind = kind;
    c.hidden = {128, 128, 128};
    c.epsilon = 0.005;
    c.lr = 2e-6;
    c.batch_size = 512;
    return c;
}

void to_json(nlohmann::json& j, const AgentConfig& c) {
    j = nlohmann::json{
        {"kind", to_string(c.kind)},
        {"gamma", c.gamma},
        {"lr", c.lr},
        {"batch_size", c.batch_size},
        {"hidden", c.hidden},
        {"activation", nn::to_string(c.activation)},
        {"reward_scale", c.reward_scale},
        {"max_grad_norm", c.max_grad_norm},
        {"diversity_lambda", c.diversity_lambda},
        {"epsilon", c.epsilon},
        {"target_sync", c.target_sync},
        {"replay_capacity", c.replay_capacity},
        {"updates_per_epoch", c.updates_per_epoch},
        {"clip_ratio", c.clip_ratio},
        {"gae_lambda", c.gae_lambda},
        {"ppo_epochs", c.ppo_epochs},
        {"entropy_coef", c.entropy_coef},
        {"value_coef", c.value_coef},
        {"init_log_std", c.init_log_std},
        {"tau", c.tau},
        {"exploration_noise", c.exploration_noise},
        {"alpha", c.alpha},
    };
}

void from_json(const nlohmann::json& j, AgentConfig& c) {
    if (j.contains("kind")) {
        c.kind = parse_agent_kind(j.at("kind").get<std::string>());
    }
    c.gamma = j.value("gamma", c.gamma);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("activation")) {
        c.activation = nn::parse_activation(j.at("activation").get<std::string>());
    }
    c.reward_scale = j.value("reward_scale", c.reward_scale);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.diversity_lambda = j.value("diversity_lambda", c.diversity_lambda);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.target_sync = j.value("target_sync", c.target_sync);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.updates_per_epoch = j.value("updates_per_epoch", c.updates_per_epoch);
    c.clip_ratio = j.value("clip_ratio", c.clip_ratio);
    c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
    c.ppo_epochs = j.value("ppo_epochs", c.ppo_epochs);
    c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
    c.value_coef = j.value("value_coef", c.value_coef);
    c.init_log_std = j.value("init_log_std", c.init_log_std);
    c.tau = j.value("tau", c.tau);
    c.exploration_noise = j.value("exploration_noise", c.exploration_noise);
    c.alpha = j.value("alpha", c.alpha);
}

void TrainSchedule::validate() const {
    require(epochs >= 1, "epochs must be >= 1");
    require(rollout_steps >= 1, "rollout_steps must be >= 1");
    require(num_envs >= 1, "num_envs must be >= 1");
}

void to_json(nlohmann::json& j, const TrainSchedule& s) {
    j = nlohmann::json{
        {"epochs", s.epochs}, {"rollout_steps", s.rollout_steps}, {"num_envs", s.num_envs}};
}

void from_json(const nlohmann::json& j, TrainSchedule& s) {
    s.epochs = j.value("epochs", s.epochs);
    s.rollout_steps = j.value("rollout_steps", s.rollout_steps);
    s.num_envs = j.value("num_envs", s.num_envs);
}

}  // namespace vecfin::agents
