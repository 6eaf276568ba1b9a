#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vecfin/common/matrix.hpp"
#include "vecfin/common/rng.hpp"

namespace vecfin::agents {

/// T x N x D rollout storage. Row t * N + i of the flat matrices holds env i
/// at step t, so column i read in time order is that env's trajectory.
struct SampleBuffer {
    std::size_t steps = 0;
    std::size_t num_envs = 0;
    std::size_t cursor = 0;
    Matrix states;
    Matrix actions;
    Matrix next_states;
    /// T x N, unscaled env rewards.
    Matrix rewards;
    Matrix dones;
    /// T x N; filled by on-policy agents only.
    Matrix log_probs;
    Matrix values;
    std::uint64_t policy_version = 0;

    SampleBuffer() = default;
    SampleBuffer(std::size_t steps, std::size_t num_envs, std::size_t state_dim,
                 std::size_t action_dim);

    std::size_t state_dim() const { return static_cast<std::size_t>(states.cols()); }
    std::size_t action_dim() const { return static_cast<std::size_t>(actions.cols()); }
    std::size_t row(std::size_t t, std::size_t i) const { return t * num_envs + i; }
    bool full() const { return cursor == steps; }

    /// Writes one step for all envs at the cursor and advances it.
    void push(const Matrix& s, const Matrix& a, std::span<const double> r,
              std::span<const std::uint8_t> done, const Matrix& s_next,
              std::span<const double> log_prob = {}, std::span<const double> value = {});
};

/// sum_t gamma^t r_t over env i's column; restarts the discount after a done.
double discounted_return(const SampleBuffer& buffer, std::size_t env, double gamma);

struct TransitionBatch {
    Matrix states;
    Matrix actions;
    Matrix next_states;
    Vector rewards;
    Vector dones;
    std::vector<std::size_t> indices;
};

/// Ring buffer of transitions. Storage grows on demand up to capacity, then
/// the oldest slot is overwritten; slot indices are stable until then.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }
    std::size_t state_dim() const { return state_dim_; }
    std::size_t action_dim() const { return action_dim_; }

    /// Returns the slot written.
    std::size_t add(std::span<const double> s, std::span<const double> a, double r, double done,
                    std::span<const double> s_next);
    /// Adds every stored step of `buffer` in time-major order.
    void add_all(const SampleBuffer& buffer, double reward_scale);

    TransitionBatch gather(std::span<const std::size_t> slots) const;
    /// Uniform with replacement.
    TransitionBatch sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t state_dim_;
    std::size_t action_dim_;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
    std::vector<double> states_;
    std::vector<double> actions_;
    std::vector<double> next_states_;
    std::vector<double> rewards_;
    std::vector<double> dones_;
};

}  // namespace vecfin::agents
