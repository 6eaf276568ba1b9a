#include "impl.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::agents::detail {

namespace {

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

DqnAgent::DqnAgent(AgentConfig config, AgentSpace space, std::uint64_t seed)
    : Agent(std::move(config), std::move(space), seed),
      replay_(config_.replay_capacity, state_dim(), 1),
      opt_body_(make_adam(config_)),
      opt_value_(make_adam(config_)),
      opt_advantage_(make_adam(config_)) {
    online_ = make_q_network(state_dim(), config_.hidden, policy_dim(),
                             config_.kind == AgentKind::dueling_dqn, config_.activation,
                             derive_seed(seed, 1));
    target_ = online_;
}

Matrix DqnAgent::greedy(const Matrix& encoded) const {
    const Matrix q = q_forward(online_, encoded);
    Matrix a(q.rows(), 1);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        a(r, 0) = static_cast<double>(argmax(row_span(q, r)));
    }
    return a;
}

Decision DqnAgent::explore(const Matrix& encoded, std::span<Rng> rngs) const {
    if (rngs.size() != static_cast<std::size_t>(encoded.rows())) {
        fail(ErrorCode::ShapeMismatch, "one RNG stream per env row is required");
    }
    const Matrix q = q_forward(online_, encoded);
    Decision d;
    d.env_actions.resize(q.rows(), 1);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        d.env_actions(r, 0) = static_cast<double>(
            epsilon_greedy(row_span(q, r), config_.epsilon, rngs[static_cast<std::size_t>(r)]));
    }
    d.stored = d.env_actions;
    return d;
}

PolicyOutputs DqnAgent::policy_outputs(const Matrix& encoded) const {
    PolicyOutputs out;
    out.kind = PolicyKind::categorical;
    out.first = q_forward(online_, encoded);
    return out;
}

void DqnAgent::observe(const SampleBuffer& buffer) {
    replay_.add_all(buffer, reward_scale());
    fresh_ += buffer.cursor * buffer.num_envs;
}

double DqnAgent::train_on_batch(const TransitionBatch& batch, std::span<const Agent* const> peers,
                                double* diversity_out) {
    const auto B = batch.states.rows();
    const Matrix q_next_target = q_forward(target_, batch.next_states);
    Vector y;
    if (config_.kind == AgentKind::double_dqn) {
        const Matrix q_next_online = q_forward(online_, batch.next_states);
        y = double_dqn_targets(batch.rewards, batch.dones, q_next_online, q_next_target,
                               config_.gamma);
    } else {
        y = dqn_targets(batch.rewards, batch.dones, q_next_target, config_.gamma);
    }

    QCache cache;
    const Matrix q = q_forward(online_, batch.states, &cache);
    Matrix dq = Matrix::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < B; ++r) {
        const auto a = static_cast<Eigen::Index>(batch.actions(r, 0));
        if (a < 0 || a >= q.cols()) {
            fail(ErrorCode::IndexOutOfRange, "stored action index out of range");
        }
        const double err = q(r, a) - y[r];
        loss += err * err;
        dq(r, a) = 2.0 * err / static_cast<double>(B);
    }
    loss /= static_cast<double>(B);

    PolicyOutputs self{PolicyKind::categorical, q, {}};
    const DiversityTerm div = diversity(self, peers, batch.states);
    dq -= div.d_first;
    loss -= div.penalty;
    check_loss(loss, "dqn");
    if (diversity_out) {
        *diversity_out = div.penalty;
    }

    QGradients g = q_backward(online_, cache, dq);
    std::vector<nn::Gradients*> all{&g.body};
    if (online_.dueling) {
        all.push_back(&g.value);
        all.push_back(&g.advantage);
    }
    nn::clip_global_norm(all, config_.max_grad_norm);
    apply_adam(online_.body, g.body, opt_body_);
    if (online_.dueling) {
        apply_adam(online_.value, g.value, opt_value_);
        apply_adam(online_.advantage, g.advantage, opt_advantage_);
    }
    ++updates_;
    if (updates_ % config_.target_sync == 0) {
        target_ = online_;
    }
    return loss;
}

UpdateStats DqnAgent::update(std::span<const Agent* const> peers) {
    UpdateStats stats;
    const std::size_t fresh = fresh_;
    fresh_ = 0;
    if (replay_.size() < config_.batch_size) {
        return stats;
    }
    const std::size_t n = planned_updates(fresh);
    for (std::size_t u = 0; u < n; ++u) {
        const TransitionBatch batch = replay_.sample(config_.batch_size, rng());
        double div = 0.0;
        stats.loss += train_on_batch(batch, peers, &div);
        stats.diversity += div;
    }
    stats.updates = n;
    stats.loss /= static_cast<double>(n);
    stats.value_loss = stats.loss + stats.diversity / static_cast<double>(n);
    stats.diversity /= static_cast<double>(n);
    bump_version();
    return stats;
}

std::unique_ptr<Agent> DqnAgent::snapshot() const {
    auto s = std::make_unique<DqnAgent>(config_, space_, seed_);
    s->online_ = online_;
    s->target_ = target_;
    s->meta_ = meta_;
    s->updates_ = updates_;
    s->set_policy_version(policy_version());
    return s;
}

std::vector<std::string> DqnAgent::network_names() const {
    if (online_.dueling) {
        return {"q_trunk", "q_value", "q_advantage", "target_trunk", "target_value",
                "target_advantage"};
    }
    return {"q", "q_target"};
}

std::vector<nn::Mlp*> DqnAgent::networks() {
    if (online_.dueling) {
        return {&online_.body, &online_.value, &online_.advantage,
                &target_.body, &target_.value, &target_.advantage};
    }
    return {&online_.body, &target_.body};
}

}  // namespace vecfin::agents::detail
