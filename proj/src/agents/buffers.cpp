#include "vecfin/agents/buffers.hpp"

#include <algorithm>

#include "vecfin/common/error.hpp"

namespace vecfin::agents {

namespace {

Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

SampleBuffer::SampleBuffer(std::size_t steps_, std::size_t num_envs_, std::size_t state_dim,
                           std::size_t action_dim)
    : steps(steps_), num_envs(num_envs_) {
    if (steps < 1 || num_envs < 1) {
        fail(ErrorCode::InvalidArgument, "sample buffer needs T >= 1 and N >= 1");
    }
    const auto rows = ix(steps * num_envs);
    states = Matrix::Zero(rows, ix(state_dim));
    actions = Matrix::Zero(rows, ix(action_dim));
    next_states = Matrix::Zero(rows, ix(state_dim));
    rewards = Matrix::Zero(ix(steps), ix(num_envs));
    dones = Matrix::Zero(ix(steps), ix(num_envs));
    log_probs = Matrix::Zero(ix(steps), ix(num_envs));
    values = Matrix::Zero(ix(steps), ix(num_envs));
}

void SampleBuffer::push(const Matrix& s, const Matrix& a, std::span<const double> r,
                        std::span<const std::uint8_t> done, const Matrix& s_next,
                        std::span<const double> log_prob, std::span<const double> value) {
    if (full()) {
        fail(ErrorCode::IndexOutOfRange, "sample buffer is full");
    }
    const auto N = ix(num_envs);
    if (s.rows() != N || s_next.rows() != N || a.rows() != N || s.cols() != states.cols() ||
        s_next.cols() != states.cols() || a.cols() != actions.cols() ||
        r.size() != num_envs || done.size() != num_envs) {
        fail(ErrorCode::ShapeMismatch, "step does not match sample buffer shape");
    }
    const auto t = ix(cursor);
    states.middleRows(t * N, N) = s;
    actions.middleRows(t * N, N) = a;
    next_states.middleRows(t * N, N) = s_next;
    for (Eigen::Index i = 0; i < N; ++i) {
        rewards(t, i) = r[static_cast<std::size_t>(i)];
        dones(t, i) = done[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        if (!log_prob.empty()) {
            log_probs(t, i) = log_prob[static_cast<std::size_t>(i)];
        }
        if (!value.empty()) {
            values(t, i) = value[static_cast<std::size_t>(i)];
        }
    }
    ++cursor;
}

double discounted_return(const SampleBuffer& buffer, std::size_t env, double gamma) {
    if (env >= buffer.num_envs) {
        fail(ErrorCode::IndexOutOfRange, "env index out of range");
    }
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t t = 0; t < buffer.cursor; ++t) {
        total += discount * buffer.rewards(ix(t), ix(env));
        discount = buffer.dones(ix(t), ix(env)) != 0.0 ? 1.0 : discount * gamma;
    }
    return total;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
    if (capacity < 1) {
        fail(ErrorCode::InvalidArgument, "replay capacity must be >= 1");
    }
}

std::size_t ReplayBuffer::add(std::span<const double> s, std::span<const double> a, double r,
                              double done, std::span<const double> s_next) {
    if (s.size() != state_dim_ || s_next.size() != state_dim_ || a.size() != action_dim_) {
        fail(ErrorCode::ShapeMismatch, "transition does not match replay buffer shape");
    }
    const std::size_t slot = next_;
    if (slot == size_) {
        states_.insert(states_.end(), s.begin(), s.end());
        actions_.insert(actions_.end(), a.begin(), a.end());
        next_states_.insert(next_states_.end(), s_next.begin(), s_next.end());
        rewards_.push_back(r);
        dones_.push_back(done);
        ++size_;
    } else {
        std::copy(s.begin(), s.end(), states_.begin() + static_cast<std::ptrdiff_t>(slot * state_dim_));
        std::copy(a.begin(), a.end(), actions_.begin() + static_cast<std::ptrdiff_t>(slot * action_dim_));
        std::copy(s_next.begin(), s_next.end(),
                  next_states_.begin() + static_cast<std::ptrdiff_t>(slot * state_dim_));
        rewards_[slot] = r;
        dones_[slot] = done;
    }
    next_ = (slot + 1) % capacity_;
    return slot;
}

void ReplayBuffer::add_all(const SampleBuffer& buffer, double reward_scale) {
    for (std::size_t t = 0; t < buffer.cursor; ++t) {
        for (std::size_t i = 0; i < buffer.num_envs; ++i) {
            const auto row = ix(buffer.row(t, i));
            add({buffer.states.row(row).data(), state_dim_},
                {buffer.actions.row(row).data(), action_dim_},
                reward_scale * buffer.rewards(ix(t), ix(i)), buffer.dones(ix(t), ix(i)),
                {buffer.next_states.row(row).data(), state_dim_});
        }
    }
}

TransitionBatch ReplayBuffer::gather(std::span<const std::size_t> slots) const {
    TransitionBatch b;
    const auto n = ix(slots.size());
    b.states.resize(n, ix(state_dim_));
    b.next_states.resize(n, ix(state_dim_));
    b.actions.resize(n, ix(action_dim_));
    b.rewards.resize(n);
    b.dones.resize(n);
    b.indices.assign(slots.begin(), slots.end());
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t slot = slots[static_cast<std::size_t>(r)];
        if (slot >= size_) {
            fail(ErrorCode::IndexOutOfRange, "replay slot out of range");
        }
        std::copy_n(states_.begin() + static_cast<std::ptrdiff_t>(slot * state_dim_), state_dim_,
                    b.states.row(r).data());
        std::copy_n(next_states_.begin() + static_cast<std::ptrdiff_t>(slot * state_dim_),
                    state_dim_, b.next_states.row(r).data());
        std::copy_n(actions_.begin() + static_cast<std::ptrdiff_t>(slot * action_dim_),
                    action_dim_, b.actions.row(r).data());
        b.rewards[r] = rewards_[slot];
        b.dones[r] = dones_[slot];
    }
    return b;
}

TransitionBatch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (size_ == 0) {
        fail(ErrorCode::InvalidArgument, "sampling from an empty replay buffer");
    }
    std::vector<std::size_t> slots(n);
    for (auto& s : slots) {
        s = uniform_index(rng, size_);
    }
    return gather(slots);
}

}  // namespace vecfin::agents
