#include <cmath>
#include <numbers>

#include "impl.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/nn/distributions.hpp"

namespace vecfin::agents::detail {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

struct SquashedSample {
    Matrix noise;
    Matrix pre;
    Matrix action;
    Vector log_prob;
};

SquashedSample squash_sample(const Matrix& mean, const Matrix& log_std, Rng& rng) {
    SquashedSample s;
    const auto B = mean.rows();
    const auto K = mean.cols();
    s.noise.resize(B, K);
    s.pre.resize(B, K);
    s.action.resize(B, K);
    s.log_prob = Vector::Zero(B);
    for (Eigen::Index r = 0; r < B; ++r) {
        for (Eigen::Index c = 0; c < K; ++c) {
            const double z = standard_normal(rng);
            const double u = mean(r, c) + std::exp(log_std(r, c)) * z;
            s.noise(r, c) = z;
            s.pre(r, c) = u;
            s.action(r, c) = std::tanh(u);
            s.log_prob[r] += -0.5 * z * z - log_std(r, c) - kHalfLog2Pi - nn::tanh_log_det(u);
        }
    }
    return s;
}

}  // namespace

SacAgent::SacAgent(AgentConfig config, AgentSpace space, std::uint64_t seed)
    : Agent(std::move(config), std::move(space), seed),
      replay_(config_.replay_capacity, state_dim(), num_assets()),
      opt_actor_(make_adam(config_)),
      opt_q1_(make_adam(config_)),
      opt_q2_(make_adam(config_)) {
    const std::size_t K = num_assets();
    actor_ = nn::init_params(layer_sizes(state_dim(), config_.hidden, 2 * K), config_.activation,
                             derive_seed(seed, 1));
    q1_ = nn::init_params(layer_sizes(state_dim() + K, config_.hidden, 1), config_.activation,
                          derive_seed(seed, 2));
    q2_ = nn::init_params(layer_sizes(state_dim() + K, config_.hidden, 1), config_.activation,
                          derive_seed(seed, 3));
    q1_target_ = q1_;
    q2_target_ = q2_;
}

void SacAgent::heads(const Matrix& out, Matrix& mean, Matrix& log_std) const {
    const auto K = static_cast<Eigen::Index>(num_assets());
    mean = out.leftCols(K);
    log_std = out.rightCols(K).unaryExpr([](double v) { return nn::clamp_log_std(v); });
}

Matrix SacAgent::mean_action(const Matrix& encoded) const {
    Matrix mean, log_std;
    heads(nn::forward(actor_, encoded), mean, log_std);
    return mean.array().tanh().matrix();
}

Matrix SacAgent::greedy(const Matrix& encoded) const { return mean_action(encoded); }

Decision SacAgent::explore(const Matrix& encoded, std::span<Rng> rngs) const {
    if (rngs.size() != static_cast<std::size_t>(encoded.rows())) {
        fail(ErrorCode::ShapeMismatch, "one RNG stream per env row is required");
    }
    Matrix mean, log_std;
    heads(nn::forward(actor_, encoded), mean, log_std);
    Matrix a(mean.rows(), mean.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Rng& rng = rngs[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            a(r, c) = std::tanh(mean(r, c) + std::exp(log_std(r, c)) * standard_normal(rng));
        }
    }
    Decision d;
    d.env_actions = a;
    d.stored = std::move(a);
    return d;
}

PolicyOutputs SacAgent::policy_outputs(const Matrix& encoded) const {
    PolicyOutputs out;
    out.kind = PolicyKind::gaussian;
    heads(nn::forward(actor_, encoded), out.first, out.log_std);
    return out;
}

void SacAgent::observe(const SampleBuffer& buffer) {
    replay_.add_all(buffer, reward_scale());
    fresh_ += buffer.cursor * buffer.num_envs;
}

UpdateStats SacAgent::update(std::span<const Agent* const> peers) {
    UpdateStats stats;
    const std::size_t fresh = fresh_;
    fresh_ = 0;
    if (replay_.size() < config_.batch_size) {
        return stats;
    }
    const auto K = static_cast<Eigen::Index>(num_assets());
    const double alpha = config_.alpha;
    const std::size_t n = planned_updates(fresh);
    for (std::size_t u = 0; u < n; ++u) {
        const TransitionBatch b = replay_.sample(config_.batch_size, rng());
        const auto B = b.states.rows();
        const double inv = 1.0 / static_cast<double>(B);

        Matrix m_next, ls_next;
        heads(nn::forward(actor_, b.next_states), m_next, ls_next);
        const SquashedSample next = squash_sample(m_next, ls_next, rng());
        const Matrix sa_next = hcat(b.next_states, next.action);
        const Vector q1n = nn::forward(q1_target_, sa_next).col(0);
        const Vector q2n = nn::forward(q2_target_, sa_next).col(0);
        const Vector y =
            sac_targets(b.rewards, b.dones, q1n, q2n, next.log_prob, config_.gamma, alpha);

        const Matrix sa = hcat(b.states, b.actions);
        nn::ForwardCache c1, c2;
        const Matrix e1 = nn::forward(q1_, sa, &c1).col(0) - y;
        const Matrix e2 = nn::forward(q2_, sa, &c2).col(0) - y;
        const double critic_loss = (e1.squaredNorm() + e2.squaredNorm()) * inv;
        auto g1 = nn::backward(q1_, c1, 2.0 * inv * e1).grads;
        auto g2 = nn::backward(q2_, c2, 2.0 * inv * e2).grads;

        nn::ForwardCache ac;
        const Matrix out = nn::forward(actor_, b.states, &ac);
        Matrix mean, log_std;
        heads(out, mean, log_std);
        const SquashedSample pi = squash_sample(mean, log_std, rng());
        const Matrix sa_pi = hcat(b.states, pi.action);
        nn::ForwardCache p1, p2;
        const Matrix qp1 = nn::forward(q1_, sa_pi, &p1);
        const Matrix qp2 = nn::forward(q2_, sa_pi, &p2);
        Matrix up1 = Matrix::Zero(B, 1);
        Matrix up2 = Matrix::Zero(B, 1);
        double actor_loss = 0.0;
        for (Eigen::Index r = 0; r < B; ++r) {
            const bool first = qp1(r, 0) <= qp2(r, 0);
            const double qmin = first ? qp1(r, 0) : qp2(r, 0);
            (first ? up1 : up2)(r, 0) = -inv;
            actor_loss += (alpha * pi.log_prob[r] - qmin) * inv;
        }
        const Matrix d_action = nn::backward(q1_, p1, up1).input_grad.rightCols(K) +
                                nn::backward(q2_, p2, up2).input_grad.rightCols(K);

        Matrix d_out = Matrix::Zero(B, 2 * K);
        for (Eigen::Index r = 0; r < B; ++r) {
            for (Eigen::Index c = 0; c < K; ++c) {
                const double a = pi.action(r, c);
                const double sigma = std::exp(log_std(r, c));
                const double du = alpha * inv * 2.0 * a + d_action(r, c) * (1.0 - a * a);
                d_out(r, c) = du;
                d_out(r, K + c) = -alpha * inv + du * sigma * pi.noise(r, c);
            }
        }

        PolicyOutputs self{PolicyKind::gaussian, mean, log_std};
        const DiversityTerm div = diversity(self, peers, b.states);
        d_out.leftCols(K) -= div.d_first;
        d_out.rightCols(K) -= div.d_log_std;
        for (Eigen::Index r = 0; r < B; ++r) {
            for (Eigen::Index c = 0; c < K; ++c) {
                const double raw = out(r, K + c);
                if (raw < nn::kLogStdMin || raw > nn::kLogStdMax) {
                    d_out(r, K + c) = 0.0;
                }
            }
        }
        check_loss(critic_loss + actor_loss - div.penalty, "sac");

        auto ga = nn::backward(actor_, ac, d_out).grads;
        nn::Gradients* gq[] = {&g1, &g2};
        nn::clip_global_norm(gq, config_.max_grad_norm);
        nn::Gradients* gp[] = {&ga};
        nn::clip_global_norm(gp, config_.max_grad_norm);
        apply_adam(q1_, g1, opt_q1_);
        apply_adam(q2_, g2, opt_q2_);
        apply_adam(actor_, ga, opt_actor_);
        nn::soft_update(q1_target_, q1_, config_.tau);
        nn::soft_update(q2_target_, q2_, config_.tau);

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

std::unique_ptr<Agent> SacAgent::snapshot() const {
    auto s = std::make_unique<SacAgent>(config_, space_, seed_);
    s->actor_ = actor_;
    s->q1_ = q1_;
    s->q2_ = q2_;
    s->q1_target_ = q1_target_;
    s->q2_target_ = q2_target_;
    s->meta_ = meta_;
    s->set_policy_version(policy_version());
    return s;
}

std::vector<std::string> SacAgent::network_names() const {
    return {"actor", "q1", "q2", "q1_target", "q2_target"};
}

std::vector<nn::Mlp*> SacAgent::networks() {
    return {&actor_, &q1_, &q2_, &q1_target_, &q2_target_};
}

}  // namespace vecfin::agents::detail
