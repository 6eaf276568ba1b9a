#include <cmath>

#include "impl.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::agents::detail {

DdpgAgent::DdpgAgent(AgentConfig config, AgentSpace space, std::uint64_t seed)
    : Agent(std::move(config), std::move(space), seed),
      replay_(config_.replay_capacity, state_dim(), num_assets()),
      opt_actor_(make_adam(config_)),
      opt_critic_(make_adam(config_)) {
    const std::size_t K = num_assets();
    actor_ = nn::init_params(layer_sizes(state_dim(), config_.hidden, K), config_.activation,
                             derive_seed(seed, 1), nn::Activation::tanh);
    critic_ = nn::init_params(layer_sizes(state_dim() + K, config_.hidden, 1), config_.activation,
                              derive_seed(seed, 2));
    actor_target_ = actor_;
    critic_target_ = critic_;
}

Matrix DdpgAgent::mean_action(const Matrix& encoded) const { return nn::forward(actor_, encoded); }

Matrix DdpgAgent::greedy(const Matrix& encoded) const { return mean_action(encoded); }

Decision DdpgAgent::explore(const Matrix& encoded, std::span<Rng> rngs) const {
    if (rngs.size() != static_cast<std::size_t>(encoded.rows())) {
        fail(ErrorCode::ShapeMismatch, "one RNG stream per env row is required");
    }
    Matrix a = nn::forward(actor_, encoded);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Rng& rng = rngs[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            a(r, c) = std::clamp(a(r, c) + config_.exploration_noise * standard_normal(rng), -1.0, 1.0);
        }
    }
    Decision d;
    d.env_actions = a;
    d.stored = std::move(a);
    return d;
}

PolicyOutputs DdpgAgent::policy_outputs(const Matrix& encoded) const {
    PolicyOutputs out;
    out.kind = PolicyKind::gaussian;
    out.first = nn::forward(actor_, encoded);
    out.log_std = Matrix::Constant(out.first.rows(), out.first.cols(), std::log(kDdpgPolicyStd));
    return out;
}

void DdpgAgent::observe(const SampleBuffer& buffer) {
    replay_.add_all(buffer, reward_scale());
    fresh_ += buffer.cursor * buffer.num_envs;
}

UpdateStats DdpgAgent::update(std::span<const Agent* const> peers) {
    UpdateStats stats;
    const std::size_t fresh = fresh_;
    fresh_ = 0;
    if (replay_.size() < config_.batch_size) {
        return stats;
    }
    const auto K = static_cast<Eigen::Index>(num_assets());
    const std::size_t n = planned_updates(fresh);
    for (std::size_t u = 0; u < n; ++u) {
        const TransitionBatch b = replay_.sample(config_.batch_size, rng());
        const auto B = b.states.rows();
        const double inv = 1.0 / static_cast<double>(B);

        const Matrix a_next = nn::forward(actor_target_, b.next_states);
        const Vector q_next = nn::forward(critic_target_, hcat(b.next_states, a_next)).col(0);
        const Vector y = bootstrap_targets(b.rewards, b.dones, q_next, config_.gamma);

        nn::ForwardCache cc;
        const Matrix q = nn::forward(critic_, hcat(b.states, b.actions), &cc);
        const Matrix err = q.col(0) - y;
        const double critic_loss = err.squaredNorm() * inv;
        auto gc = nn::backward(critic_, cc, 2.0 * inv * err).grads;

        nn::ForwardCache ac;
        const Matrix mu = nn::forward(actor_, b.states, &ac);
        nn::ForwardCache qc;
        const Matrix q_pi = nn::forward(critic_, hcat(b.states, mu), &qc);
        const double actor_loss = -q_pi.mean();
        const Matrix dq = Matrix::Constant(B, 1, -inv);
        Matrix d_mu = nn::backward(critic_, qc, dq).input_grad.rightCols(K);

        PolicyOutputs self{PolicyKind::gaussian, mu,
                           Matrix::Constant(B, K, std::log(kDdpgPolicyStd))};
        const DiversityTerm div = diversity(self, peers, b.states);
        d_mu -= div.d_first;
        check_loss(critic_loss + actor_loss - div.penalty, "ddpg");

        auto ga = nn::backward(actor_, ac, d_mu).grads;
        nn::Gradients* gcs[] = {&gc};
        nn::clip_global_norm(gcs, config_.max_grad_norm);
        nn::Gradients* gas[] = {&ga};
        nn::clip_global_norm(gas, config_.max_grad_norm);
        apply_adam(critic_, gc, opt_critic_);
        apply_adam(actor_, ga, opt_actor_);
        nn::soft_update(actor_target_, actor_, config_.tau);
        nn::soft_update(critic_target_, critic_, config_.tau);

        stats.value_loss += critic_loss;
        stats.policy_loss += actor_loss;
        stats.diversity += div.penalty;
    }
    const double m = static_cast<double>(n);
    stats.value_loss /= m;
    stats.policy_loss /= m;
    stats.diversity /= m;
    stats.loss = stats.value_loss + stats.policy_loss - stats.diversity;
    stats.updates = n;
    bump_version();
    return stats;
}

std::unique_ptr<Agent> DdpgAgent::snapshot() const {
    auto s = std::make_unique<DdpgAgent>(config_, space_, seed_);
    s->actor_ = actor_;
    s->critic_ = critic_;
    s->actor_target_ = actor_target_;
    s->critic_target_ = critic_target_;
    s->meta_ = meta_;
    s->set_policy_version(policy_version());
    return s;
}

std::vector<std::string> DdpgAgent::network_names() const {
    return {"actor", "critic", "actor_target", "critic_target"};
}

std::vector<nn::Mlp*> DdpgAgent::networks() {
    return {&actor_, &critic_, &actor_target_, &critic_target_};
}

}  // namespace vecfin::agents::detail
