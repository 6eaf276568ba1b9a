#include <cmath>

#include "impl.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/nn/distributions.hpp"

namespace vecfin::agents {

namespace detail {

Matrix hcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        fail(ErrorCode::ShapeMismatch, "concatenated blocks differ in rows");
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a;
    out.rightCols(b.cols()) = b;
    return out;
}

void apply_adam(nn::Mlp& net, const nn::Gradients& grads, nn::AdamState& state) {
    if (grads.weight.empty()) {
        return;
    }
    nn::adam_step(net, grads, state);
}

nn::AdamState make_adam(const AgentConfig& config) {
    nn::AdamState s;
    s.config.lr = config.lr;
    return s;
}

std::vector<std::size_t> layer_sizes(std::size_t in, std::span<const std::size_t> hidden,
                                     std::size_t out) {
    std::vector<std::size_t> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

void check_loss(double loss, const char* what) {
    if (!std::isfinite(loss)) {
        fail(ErrorCode::NonFiniteLoss, std::string(what) + " loss is not finite");
    }
}

}  // namespace detail

void to_json(nlohmann::json& j, const TrainingMeta& m) {
    j = nlohmann::json{
        {"seed", m.seed}, {"window", m.window}, {"num_envs", m.num_envs}, {"epochs", m.epochs}};
}

void from_json(const nlohmann::json& j, TrainingMeta& m) {
    m.seed = j.value("seed", m.seed);
    m.window = j.value("window", m.window);
    m.num_envs = j.value("num_envs", m.num_envs);
    m.epochs = j.value("epochs", m.epochs);
}

Agent::Agent(AgentConfig config, AgentSpace space, std::uint64_t seed)
    : config_(std::move(config)), space_(std::move(space)), seed_(seed),
      rng_(make_rng(seed, 0xA6E7)) {
    config_.validate();
    space_.env_config.validate();
    meta_.seed = seed;
    if (space_.num_assets < 1) {
        fail(ErrorCode::ConfigError, "agent needs at least one asset");
    }
    const bool env_discrete = space_.env_config.mode == env::ActionMode::discrete;
    if (discrete() != env_discrete) {
        fail(ErrorCode::ConfigError, to_string(config_.kind) + " agents need a " +
                                         (discrete() ? "discrete" : "continuous") +
                                         " action env");
    }
    if (discrete() && space_.num_assets != 1) {
        fail(ErrorCode::ConfigError, "discrete agents trade a single asset");
    }
}

std::size_t Agent::policy_dim() const {
    return discrete() ? space_.env_config.num_discrete_actions() : space_.num_assets;
}

double Agent::reward_scale() const {
    return config_.reward_scale > 0.0 ? config_.reward_scale
                                      : 100.0 / space_.env_config.initial_cash;
}

Matrix Agent::encode(const env::BatchState& state) const {
    if (state.num_assets != space_.num_assets || state.num_features != space_.num_features) {
        fail(ErrorCode::ShapeMismatch, "state shape does not match the agent");
    }
    return env::encode_state(state, space_.normalizer);
}

Matrix Agent::action_probs(const Matrix& encoded) const {
    const PolicyOutputs out = policy_outputs(encoded);
    if (out.kind != PolicyKind::categorical) {
        fail(ErrorCode::MixedActionSpaces, "action probabilities need a discrete policy");
    }
    Matrix p(out.first.rows(), out.first.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const auto row = nn::softmax({out.first.data() + r * out.first.cols(),
                                      static_cast<std::size_t>(out.first.cols())});
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            p(r, c) = row[static_cast<std::size_t>(c)];
        }
    }
    return p;
}

Matrix Agent::mean_action(const Matrix&) const {
    fail(ErrorCode::MixedActionSpaces, "mean actions need a continuous policy");
}

std::vector<const nn::Mlp*> Agent::networks() const {
    auto nets = const_cast<Agent*>(this)->networks();
    return {nets.begin(), nets.end()};
}

std::size_t Agent::planned_updates(std::size_t transitions) const {
    if (config_.updates_per_epoch > 0) {
        return config_.updates_per_epoch;
    }
    return std::max<std::size_t>(1, transitions / config_.batch_size);
}

DiversityTerm Agent::diversity(const PolicyOutputs& self, std::span<const Agent* const> peers,
                               const Matrix& states) const {
    std::vector<PolicyOutputs> outs;
    if (config_.diversity_lambda > 0.0) {
        for (const Agent* p : peers) {
            outs.push_back(p->policy_outputs(states));
        }
    }
    return kl_diversity_penalty(self, outs, config_.diversity_lambda);
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const AgentSpace& space,
                                  std::uint64_t seed) {
    switch (config.kind) {
    case AgentKind::dqn:
    case AgentKind::double_dqn:
    case AgentKind::dueling_dqn:
        return std::make_unique<detail::DqnAgent>(config, space, seed);
    case AgentKind::ppo:
        return std::make_unique<detail::PpoAgent>(config, space, seed);
    case AgentKind::ddpg:
        return std::make_unique<detail::DdpgAgent>(config, space, seed);
    case AgentKind::sac:
        return std::make_unique<detail::SacAgent>(config, space, seed);
    }
    fail(ErrorCode::ConfigError, "unknown agent kind");
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const data::MarketFrame& frame,
                                  const env::EnvConfig& env_config, std::uint64_t seed) {
    AgentSpace space;
    space.num_assets = frame.num_assets();
    space.num_features = frame.num_features();
    space.env_config = env_config;
    space.normalizer = env::StateNormalizer::for_frame(frame, env_config);
    return make_agent(config, space, seed);
}

double kl_diversity_penalty(const Agent& self, std::span<const Agent* const> peers,
                            const Matrix& states, double lambda) {
    std::vector<PolicyOutputs> outs;
    for (const Agent* p : peers) {
        if (p->discrete() != self.discrete()) {
            fail(ErrorCode::MixedActionSpaces, "diversity peers differ in action-space kind");
        }
        outs.push_back(p->policy_outputs(states));
    }
    return kl_diversity_penalty(self.policy_outputs(states), outs, lambda).penalty;
}

double mean_pairwise_kl(std::span<const Agent* const> agents, const Matrix& states) {
    std::vector<PolicyOutputs> outs;
    for (const Agent* a : agents) {
        outs.push_back(a->policy_outputs(states));
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < outs.size(); ++a) {
        for (std::size_t b = 0; b < outs.size(); ++b) {
            if (a != b) {
                total += mean_kl(outs[a], outs[b]);
                ++pairs;
            }
        }
    }
    return pairs ? total / static_cast<double>(pairs) : 0.0;
}

void check_compatible(const Agent& agent, std::size_t state_dim, const env::EnvConfig& env_config) {
    if (agent.state_dim() != state_dim) {
        fail(ErrorCode::ShapeMismatch, "agent expects state dim " +
                                           std::to_string(agent.state_dim()) + ", env has " +
                                           std::to_string(state_dim));
    }
    const bool env_discrete = env_config.mode == env::ActionMode::discrete;
    if (agent.discrete() != env_discrete) {
        fail(ErrorCode::MixedActionSpaces, "agent and env action spaces differ");
    }
    if (env_discrete && env_config.num_discrete_actions() != agent.policy_dim()) {
        fail(ErrorCode::ShapeMismatch, "agent and env differ in discrete action count");
    }
}

}  // namespace vecfin::agents
