#include <cmath>
#include <numbers>

#include "impl.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/nn/distributions.hpp"

namespace vecfin::agents::detail {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    }
    return idx;
}

}  // namespace

PpoAgent::PpoAgent(AgentConfig config, AgentSpace space, std::uint64_t seed)
    : Agent(std::move(config), std::move(space), seed),
      opt_actor_(make_adam(config_)),
      opt_critic_(make_adam(config_)),
      opt_log_std_(make_adam(config_)) {
    const std::size_t K = num_assets();
    actor_ = nn::init_params(layer_sizes(state_dim(), config_.hidden, K), config_.activation,
                             derive_seed(seed, 1));
    critic_ = nn::init_params(layer_sizes(state_dim(), config_.hidden, 1), config_.activation,
                              derive_seed(seed, 2));
    log_std_.assign(K, nn::clamp_log_std(config_.init_log_std));
}

Matrix PpoAgent::mean_action(const Matrix& encoded) const {
    return nn::forward(actor_, encoded).cwiseMax(-1.0).cwiseMin(1.0);
}

Matrix PpoAgent::greedy(const Matrix& encoded) const { return mean_action(encoded); }

Decision PpoAgent::explore(const Matrix& encoded, std::span<Rng> rngs) const {
    const auto N = encoded.rows();
    if (rngs.size() != static_cast<std::size_t>(N)) {
        fail(ErrorCode::ShapeMismatch, "one RNG stream per env row is required");
    }
    const Matrix mean = nn::forward(actor_, encoded);
    const Matrix value = nn::forward(critic_, encoded);
    Decision d;
    d.stored.resize(N, mean.cols());
    d.log_probs.resize(static_cast<std::size_t>(N));
    d.values.resize(static_cast<std::size_t>(N));
    for (Eigen::Index r = 0; r < N; ++r) {
        nn::DiagGaussian g({mean.data() + r * mean.cols(), static_cast<std::size_t>(mean.cols())},
                           log_std_);
        const auto u = g.sample(rngs[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < mean.cols(); ++c) {
            d.stored(r, c) = u[static_cast<std::size_t>(c)];
        }
        d.log_probs[static_cast<std::size_t>(r)] = g.log_prob(u);
        d.values[static_cast<std::size_t>(r)] = value(r, 0);
    }
    d.env_actions = d.stored.cwiseMax(-1.0).cwiseMin(1.0);
    return d;
}

PolicyOutputs PpoAgent::policy_outputs(const Matrix& encoded) const {
    PolicyOutputs out;
    out.kind = PolicyKind::gaussian;
    out.first = nn::forward(actor_, encoded);
    out.log_std.resize(out.first.rows(), out.first.cols());
    for (Eigen::Index c = 0; c < out.first.cols(); ++c) {
        out.log_std.col(c).setConstant(log_std_[static_cast<std::size_t>(c)]);
    }
    return out;
}

void PpoAgent::observe(const SampleBuffer& buffer) {
    if (buffer.policy_version != policy_version()) {
        fail(ErrorCode::StalePolicy, "rollout was collected by policy version " +
                                         std::to_string(buffer.policy_version) + ", agent is at " +
                                         std::to_string(policy_version()));
    }
    pending_ = buffer;
}

UpdateStats PpoAgent::update(std::span<const Agent* const> peers) {
    UpdateStats stats;
    if (!pending_) {
        return stats;
    }
    const SampleBuffer& buf = *pending_;
    if (buf.policy_version != policy_version()) {
        fail(ErrorCode::StalePolicy, "PPO update on a buffer from another policy version");
    }
    const auto T = static_cast<Eigen::Index>(buf.cursor);
    const auto N = static_cast<Eigen::Index>(buf.num_envs);
    const auto rows = T * N;
    const auto K = static_cast<Eigen::Index>(num_assets());

    const Matrix next_v_flat = nn::forward(critic_, buf.next_states.topRows(rows));
    Matrix next_values(T, N);
    Matrix values(T, N);
    Matrix rewards(T, N);
    Matrix dones(T, N);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index i = 0; i < N; ++i) {
            next_values(t, i) = next_v_flat(t * N + i, 0);
            values(t, i) = buf.values(t, i);
            rewards(t, i) = reward_scale() * buf.rewards(t, i);
            dones(t, i) = buf.dones(t, i);
        }
    }
    GaeResult gae =
        gae_advantages(rewards, values, next_values, dones, config_.gamma, config_.gae_lambda);
    normalize_in_place(gae.advantages);

    const std::size_t total = static_cast<std::size_t>(rows);
    const std::size_t B = std::min(config_.batch_size, total);
    std::size_t minibatches = 0;
    for (std::size_t epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
        const auto order = permutation(total, rng());
        for (std::size_t start = 0; start < total; start += B) {
            const std::size_t end = std::min(total, start + B);
            const auto nb = static_cast<Eigen::Index>(end - start);
            const double inv = 1.0 / static_cast<double>(nb);
            Matrix S(nb, buf.states.cols());
            Matrix U(nb, K);
            Vector old_lp(nb), adv(nb), ret(nb);
            for (Eigen::Index r = 0; r < nb; ++r) {
                const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
                S.row(r) = buf.states.row(src);
                U.row(r) = buf.actions.row(src);
                old_lp[r] = buf.log_probs.data()[src];
                adv[r] = gae.advantages.data()[src];
                ret[r] = gae.returns.data()[src];
            }

            nn::ForwardCache actor_cache;
            const Matrix mean = nn::forward(actor_, S, &actor_cache);
            Matrix d_mean = Matrix::Zero(nb, K);
            std::vector<double> d_ls(static_cast<std::size_t>(K), 0.0);
            double policy_loss = 0.0;
            for (Eigen::Index r = 0; r < nb; ++r) {
                double lp = 0.0;
                for (Eigen::Index c = 0; c < K; ++c) {
                    const double ls = log_std_[static_cast<std::size_t>(c)];
                    const double z = (U(r, c) - mean(r, c)) * std::exp(-ls);
                    lp += -0.5 * z * z - ls - kHalfLog2Pi;
                }
                const double ratio = std::exp(lp - old_lp[r]);
                policy_loss -= ppo_clip_term(ratio, adv[r], config_.clip_ratio) * inv;
                const double g = -ppo_clip_grad(ratio, adv[r], config_.clip_ratio) * inv;
                if (g == 0.0) {
                    continue;
                }
                for (Eigen::Index c = 0; c < K; ++c) {
                    const double ls = log_std_[static_cast<std::size_t>(c)];
                    const double z = (U(r, c) - mean(r, c)) * std::exp(-ls);
                    d_mean(r, c) += g * z * std::exp(-ls);
                    d_ls[static_cast<std::size_t>(c)] += g * (z * z - 1.0);
                }
            }
            double entropy = 0.0;
            for (Eigen::Index c = 0; c < K; ++c) {
                entropy += log_std_[static_cast<std::size_t>(c)] + 0.5 + kHalfLog2Pi;
                d_ls[static_cast<std::size_t>(c)] -= config_.entropy_coef;
            }

            PolicyOutputs self{PolicyKind::gaussian, mean, Matrix(nb, K)};
            for (Eigen::Index c = 0; c < K; ++c) {
                self.log_std.col(c).setConstant(log_std_[static_cast<std::size_t>(c)]);
            }
            const DiversityTerm div = diversity(self, peers, S);
            d_mean -= div.d_first;
            for (Eigen::Index c = 0; c < K; ++c) {
                d_ls[static_cast<std::size_t>(c)] -= div.d_log_std.col(c).sum();
            }

            nn::ForwardCache critic_cache;
            const Matrix v = nn::forward(critic_, S, &critic_cache);
            Matrix dv(nb, 1);
            double value_loss = 0.0;
            for (Eigen::Index r = 0; r < nb; ++r) {
                const double err = v(r, 0) - ret[r];
                value_loss += err * err * inv;
                dv(r, 0) = 2.0 * config_.value_coef * err * inv;
            }

            const double loss = policy_loss + config_.value_coef * value_loss -
                                config_.entropy_coef * entropy - div.penalty;
            check_loss(loss, "ppo");

            auto ga = nn::backward(actor_, actor_cache, d_mean).grads;
            auto gc = nn::backward(critic_, critic_cache, dv).grads;
            nn::Gradients* both[] = {&ga, &gc};
            nn::clip_global_norm(both, config_.max_grad_norm);
            apply_adam(actor_, ga, opt_actor_);
            apply_adam(critic_, gc, opt_critic_);
            for (std::size_t c = 0; c < d_ls.size(); ++c) {
                const double ls = log_std_[c];
                if (ls <= nn::kLogStdMin && d_ls[c] > 0.0) {
                    d_ls[c] = 0.0;
                }
                if (ls >= nn::kLogStdMax && d_ls[c] < 0.0) {
                    d_ls[c] = 0.0;
                }
            }
            const std::span<double> p_blocks[] = {std::span<double>(log_std_)};
            const std::span<const double> g_blocks[] = {std::span<const double>(d_ls)};
            nn::adam_step(p_blocks, g_blocks, opt_log_std_);
            for (double& ls : log_std_) {
                ls = nn::clamp_log_std(ls);
            }

            stats.loss += loss;
            stats.policy_loss += policy_loss;
            stats.value_loss += value_loss;
            stats.diversity += div.penalty;
            ++minibatches;
        }
    }
    const double m = static_cast<double>(minibatches);
    stats.loss /= m;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.diversity /= m;
    stats.updates = minibatches;
    pending_.reset();
    bump_version();
    return stats;
}

std::unique_ptr<Agent> PpoAgent::snapshot() const {
    auto s = std::make_unique<PpoAgent>(config_, space_, seed_);
    s->actor_ = actor_;
    s->critic_ = critic_;
    s->log_std_ = log_std_;
    s->meta_ = meta_;
    s->set_policy_version(policy_version());
    return s;
}

std::vector<std::string> PpoAgent::network_names() const { return {"actor", "critic"}; }

std::vector<nn::Mlp*> PpoAgent::networks() { return {&actor_, &critic_}; }

nlohmann::json PpoAgent::extra_state() const { return {{"log_std", log_std_}}; }

void PpoAgent::load_extra_state(const nlohmann::json& j) {
    auto ls = j.at("log_std").get<std::vector<double>>();
    if (ls.size() != log_std_.size()) {
        fail(ErrorCode::ShapeMismatch, "checkpoint log_std does not match asset count");
    }
    log_std_ = std::move(ls);
}

}  // namespace vecfin::agents::detail
