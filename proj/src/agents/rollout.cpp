#include <chrono>
#include <cmath>

#include "impl.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::agents {

SampleBuffer collect_rollouts(const Agent& agent, env::VecEnv& env, std::size_t steps,
                              bool explore) {
    if (steps < 1) {
        fail(ErrorCode::InvalidArgument, "rollout length must be >= 1");
    }
    check_compatible(agent, env.state_dim(), env.config());
    SampleBuffer buf(steps, env.num_envs(), agent.state_dim(), agent.action_dim());
    buf.policy_version = agent.policy_version();
    Matrix s = agent.encode(env.state());
    for (std::size_t t = 0; t < steps; ++t) {
        Decision d;
        if (explore) {
            d = agent.explore(s, env.state().rngs);
        } else {
            d.env_actions = agent.greedy(s);
            d.stored = d.env_actions;
        }
        const env::StepOutput& out = env.step(d.env_actions);
        Matrix s_next = agent.encode(env.state());
        buf.push(s, d.stored, out.rewards, out.done, s_next, d.log_probs, d.values);
        bool any_done = false;
        for (auto flag : out.done) {
            any_done = any_done || flag != 0;
        }
        if (any_done) {
            env.reset_done();
            s = agent.encode(env.state());
        } else {
            s = std::move(s_next);
        }
    }
    return buf;
}

std::vector<EpochLog> train_lockstep(std::span<Agent* const> agents,
                                     std::span<const std::shared_ptr<const data::MarketFrame>> frames,
                                     const TrainSchedule& schedule, ThreadPool* pool) {
    schedule.validate();
    if (agents.size() != frames.size()) {
        fail(ErrorCode::InvalidArgument, "one training frame per agent is required");
    }
    std::vector<env::VecEnv> envs;
    envs.reserve(agents.size());
    bool any_diversity = false;
    for (std::size_t a = 0; a < agents.size(); ++a) {
        Agent& agent = *agents[a];
        envs.emplace_back(frames[a], agent.env_config(), schedule.num_envs,
                          derive_seed(agent.meta().seed, 0xE417), pool);
        agent.meta().num_envs = schedule.num_envs;
        any_diversity = any_diversity || agent.config().diversity_lambda > 0.0;
    }
    const bool use_peers = any_diversity && agents.size() > 1;

    std::vector<EpochLog> log;
    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        std::vector<EpochLog> rows(agents.size());
        for (std::size_t a = 0; a < agents.size(); ++a) {
            const auto t0 = std::chrono::steady_clock::now();
            const SampleBuffer buf =
                collect_rollouts(*agents[a], envs[a], schedule.rollout_steps, true);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            agents[a]->observe(buf);
            rows[a].agent = a;
            rows[a].epoch = epoch;
            rows[a].mean_reward = buf.rewards.mean();
            rows[a].samples_per_sec =
                secs > 0.0 ? static_cast<double>(buf.cursor * buf.num_envs) / secs : 0.0;
        }

        std::vector<std::unique_ptr<Agent>> snaps;
        if (use_peers) {
            for (const Agent* a : agents) {
                snaps.push_back(a->snapshot());
            }
        }
        for (std::size_t a = 0; a < agents.size(); ++a) {
            std::vector<const Agent*> peers;
            for (std::size_t j = 0; j < snaps.size(); ++j) {
                if (j != a) {
                    peers.push_back(snaps[j].get());
                }
            }
            const UpdateStats stats = agents[a]->update(peers);
            if (!std::isfinite(stats.loss)) {
                fail(ErrorCode::NonFiniteLoss, "agent " + std::to_string(a) + " epoch " +
                                                   std::to_string(epoch) + ": loss is not finite");
            }
            rows[a].loss = stats.loss;
            rows[a].diversity = stats.diversity;
            ++agents[a]->meta().epochs;
        }
        log.insert(log.end(), rows.begin(), rows.end());
    }
    return log;
}

}  // namespace vecfin::agents
