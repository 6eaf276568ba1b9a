#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecfin/agents/algorithms.hpp"
#include "vecfin/agents/buffers.hpp"
#include "vecfin/agents/config.hpp"
#include "vecfin/common/matrix.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/market_frame.hpp"
#include "vecfin/env/vec_env.hpp"

namespace vecfin::agents {

/// One batch of actions from a policy.
struct Decision {
    /// Raw env actions: N x K in [-1, 1] (continuous) or N x 1 indices.
    Matrix env_actions;
    /// What the learner stores; differs from env_actions for PPO, which keeps
    /// the unclamped Gaussian draw.
    Matrix stored;
    std::vector<double> log_probs;
    std::vector<double> values;
};

struct UpdateStats {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    /// Diversity penalty that was subtracted from the loss.
    double diversity = 0.0;
    std::size_t updates = 0;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    std::int64_t window = -1;
    std::size_t num_envs = 0;
    std::size_t epochs = 0;
};

void to_json(nlohmann::json& j, const TrainingMeta& m);
void from_json(const nlohmann::json& j, TrainingMeta& m);

/// Shared shape information fixed when an agent is built.
struct AgentSpace {
    std::size_t num_assets = 0;
    std::size_t num_features = 0;
    env::EnvConfig env_config;
    env::StateNormalizer normalizer;

    std::size_t state_dim() const { return (num_features + 2) * num_assets + 1; }
};

class Agent {
public:
    Agent(AgentConfig config, AgentSpace space, std::uint64_t seed);
    virtual ~Agent() = default;

    AgentKind kind() const { return config_.kind; }
    const AgentConfig& config() const { return config_; }
    const AgentSpace& space() const { return space_; }
    const env::EnvConfig& env_config() const { return space_.env_config; }
    const env::StateNormalizer& normalizer() const { return space_.normalizer; }
    TrainingMeta& meta() { return meta_; }
    const TrainingMeta& meta() const { return meta_; }

    std::size_t state_dim() const { return space_.state_dim(); }
    std::size_t num_assets() const { return space_.num_assets; }
    bool discrete() const { return is_discrete(config_.kind); }
    /// Columns of a stored action: 1 for discrete agents, K otherwise.
    std::size_t action_dim() const { return discrete() ? 1 : space_.num_assets; }
    /// Width of the policy head: number of discrete actions or K.
    std::size_t policy_dim() const;
    double reward_scale() const;
    std::uint64_t policy_version() const { return version_; }
    /// Used when restoring a checkpoint or building a snapshot.
    void set_policy_version(std::uint64_t v) { version_ = v; }

    Matrix encode(const env::BatchState& state) const;

    /// Exploration-free actions; pure.
    virtual Matrix greedy(const Matrix& encoded) const = 0;
    /// Exploration draws use rngs[i] for row i only.
    virtual Decision explore(const Matrix& encoded, std::span<Rng> rngs) const = 0;
    virtual PolicyOutputs policy_outputs(const Matrix& encoded) const = 0;
    /// Discrete agents: softmax of the policy logits, N x m.
    Matrix action_probs(const Matrix& encoded) const;
    /// Continuous agents: the deterministic action in [-1, 1], N x K.
    virtual Matrix mean_action(const Matrix& encoded) const;

    /// Hands a finished rollout to the learner.
    virtual void observe(const SampleBuffer& buffer) = 0;
    /// One epoch of learning. Peers are read-only snapshots.
    virtual UpdateStats update(std::span<const Agent* const> peers) = 0;

    /// Copy of the networks and metadata without buffers or optimizer state.
    virtual std::unique_ptr<Agent> snapshot() const = 0;

    virtual std::vector<std::string> network_names() const = 0;
    virtual std::vector<nn::Mlp*> networks() = 0;
    std::vector<const nn::Mlp*> networks() const;
    /// Parameters held outside the MLPs.
    virtual nlohmann::json extra_state() const { return nlohmann::json::object(); }
    virtual void load_extra_state(const nlohmann::json&) {}

protected:
    void bump_version() { ++version_; }
    /// Learner-side randomness: minibatches, target-policy noise.
    Rng& rng() { return rng_; }
    std::size_t planned_updates(std::size_t transitions) const;
    /// Diversity gradients w.r.t. this agent's policy outputs on `states`.
    DiversityTerm diversity(const PolicyOutputs& self, std::span<const Agent* const> peers,
                            const Matrix& states) const;

    AgentConfig config_;
    AgentSpace space_;
    TrainingMeta meta_;
    std::uint64_t seed_;

private:
    Rng rng_;
    std::uint64_t version_ = 0;
};

/// Builds an untrained agent for frames shaped like `frame`; the normalizer
/// is anchored on that frame.
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const data::MarketFrame& frame,
                                  const env::EnvConfig& env_config, std::uint64_t seed);
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const AgentSpace& space,
                                  std::uint64_t seed);

/// lambda * sum_j mean_s KL(pi_j || pi_i) on `states` (already encoded).
double kl_diversity_penalty(const Agent& self, std::span<const Agent* const> peers,
                            const Matrix& states, double lambda);
/// Mean over ordered pairs of mean_s KL(pi_a || pi_b).
double mean_pairwise_kl(std::span<const Agent* const> agents, const Matrix& states);

/// Runs `agent` for `steps` steps in every env of `env`. Envs that finish are
/// reset in place and collection continues.
SampleBuffer collect_rollouts(const Agent& agent, env::VecEnv& env, std::size_t steps,
                              bool explore = true);

struct EpochLog {
    std::size_t agent = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
    double diversity = 0.0;
    double mean_reward = 0.0;
    double samples_per_sec = 0.0;
};

/// Trains every agent for schedule.epochs. Each agent gets its own VecEnv on
/// its own frame, seeded from its meta seed. At the start of each epoch's
/// learning phase every agent is snapshotted; those frozen copies are the
/// peers for the diversity term.
std::vector<EpochLog> train_lockstep(std::span<Agent* const> agents,
                                     std::span<const std::shared_ptr<const data::MarketFrame>> frames,
                                     const TrainSchedule& schedule, ThreadPool* pool = nullptr);

/// Checks that `agent` can act on states of `state_dim` and the env's action space.
void check_compatible(const Agent& agent, std::size_t state_dim, const env::EnvConfig& env_config);

void write_agent(std::ostream& out, const Agent& agent);
std::unique_ptr<Agent> read_agent(std::istream& in);
void save_agent(const std::filesystem::path& path, const Agent& agent);
std::unique_ptr<Agent> load_agent(const std::filesystem::path& path);

}  // namespace vecfin::agents
