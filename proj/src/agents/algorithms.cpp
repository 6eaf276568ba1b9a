#include "vecfin/agents/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include "vecfin/common/error.hpp"
#include "vecfin/nn/distributions.hpp"

namespace vecfin::agents {

namespace {

void check_batch(const Vector& rewards, const Vector& dones, Eigen::Index rows) {
    if (rewards.size() != dones.size() || rewards.size() != rows) {
        fail(ErrorCode::ShapeMismatch, "target inputs differ in batch size");
    }
}

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        fail(ErrorCode::ShapeMismatch, "argmax of an empty vector");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        fail(ErrorCode::InvalidArgument, "epsilon must be in [0, 1]");
    }
    if (epsilon > 0.0 && uniform01(rng) < epsilon) {
        return uniform_index(rng, q_values.size());
    }
    return argmax(q_values);
}

Vector dqn_targets(const Vector& rewards, const Vector& dones, const Matrix& q_next_target,
                   double gamma) {
    check_batch(rewards, dones, q_next_target.rows());
    Vector y(rewards.size());
    for (Eigen::Index r = 0; r < y.size(); ++r) {
        const double best = q_next_target.row(r).maxCoeff();
        y[r] = rewards[r] + gamma * (1.0 - dones[r]) * best;
    }
    return y;
}

Vector double_dqn_targets(const Vector& rewards, const Vector& dones, const Matrix& q_next_online,
                          const Matrix& q_next_target, double gamma) {
    check_batch(rewards, dones, q_next_target.rows());
    if (q_next_online.rows() != q_next_target.rows() ||
        q_next_online.cols() != q_next_target.cols()) {
        fail(ErrorCode::ShapeMismatch, "online and target Q tables differ in shape");
    }
    Vector y(rewards.size());
    for (Eigen::Index r = 0; r < y.size(); ++r) {
        const auto a = static_cast<Eigen::Index>(argmax(row_span(q_next_online, r)));
        y[r] = rewards[r] + gamma * (1.0 - dones[r]) * q_next_target(r, a);
    }
    return y;
}

Vector bootstrap_targets(const Vector& rewards, const Vector& dones, const Vector& q_next,
                         double gamma) {
    check_batch(rewards, dones, q_next.size());
    return (rewards.array() + gamma * (1.0 - dones.array()) * q_next.array()).matrix();
}

Vector sac_targets(const Vector& rewards, const Vector& dones, const Vector& q1_next,
                   const Vector& q2_next, const Vector& log_prob_next, double gamma, double alpha) {
    check_batch(rewards, dones, q1_next.size());
    if (q2_next.size() != q1_next.size() || log_prob_next.size() != q1_next.size()) {
        fail(ErrorCode::ShapeMismatch, "twin critic inputs differ in batch size");
    }
    const Vector soft = (q1_next.array().min(q2_next.array()) - alpha * log_prob_next.array()).matrix();
    return bootstrap_targets(rewards, dones, soft, gamma);
}

Matrix dueling_combine(const Matrix& value, const Matrix& advantage) {
    if (value.cols() != 1 || value.rows() != advantage.rows()) {
        fail(ErrorCode::ShapeMismatch, "dueling heads differ in shape");
    }
    Matrix q = advantage;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        const double shift = value(r, 0) - advantage.row(r).mean();
        q.row(r).array() += shift;
    }
    return q;
}

bool operator==(const QNetwork& a, const QNetwork& b) {
    return a.dueling == b.dueling && a.body == b.body && a.value == b.value &&
           a.advantage == b.advantage;
}

QNetwork make_q_network(std::size_t state_dim, std::span<const std::size_t> hidden,
                        std::size_t num_actions, bool dueling, nn::Activation activation,
                        std::uint64_t seed) {
    QNetwork net;
    net.dueling = dueling;
    std::vector<std::size_t> sizes{state_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    if (!dueling) {
        sizes.push_back(num_actions);
        net.body = nn::init_params(sizes, activation, derive_seed(seed, 0));
        return net;
    }
    net.body = nn::init_params(sizes, activation, derive_seed(seed, 0), activation);
    const std::size_t h = sizes.back();
    const std::size_t v_sizes[] = {h, 1};
    const std::size_t a_sizes[] = {h, num_actions};
    net.value = nn::init_params(v_sizes, activation, derive_seed(seed, 1));
    net.advantage = nn::init_params(a_sizes, activation, derive_seed(seed, 2));
    return net;
}

Matrix q_forward(const QNetwork& net, const Matrix& x, QCache* cache) {
    if (!net.dueling) {
        return nn::forward(net.body, x, cache ? &cache->body : nullptr);
    }
    const Matrix h = nn::forward(net.body, x, cache ? &cache->body : nullptr);
    const Matrix v = nn::forward(net.value, h, cache ? &cache->value : nullptr);
    const Matrix a = nn::forward(net.advantage, h, cache ? &cache->advantage : nullptr);
    return dueling_combine(v, a);
}

Matrix dueling_forward(const QNetwork& net, const Matrix& x) { return q_forward(net, x); }

QGradients q_backward(const QNetwork& net, const QCache& cache, const Matrix& dq) {
    QGradients g;
    if (!net.dueling) {
        g.body = nn::backward(net.body, cache.body, dq).grads;
        return g;
    }
    const Matrix dv = dq.rowwise().sum();
    Matrix da = dq;
    for (Eigen::Index r = 0; r < da.rows(); ++r) {
        da.row(r).array() -= dq.row(r).mean();
    }
    auto bv = nn::backward(net.value, cache.value, dv);
    auto ba = nn::backward(net.advantage, cache.advantage, da);
    const Matrix dh = bv.input_grad + ba.input_grad;
    g.body = nn::backward(net.body, cache.body, dh).grads;
    g.value = std::move(bv.grads);
    g.advantage = std::move(ba.grads);
    return g;
}

void q_soft_update(QNetwork& target, const QNetwork& source, double tau) {
    nn::soft_update(target.body, source.body, tau);
    if (source.dueling) {
        nn::soft_update(target.value, source.value, tau);
        nn::soft_update(target.advantage, source.advantage, tau);
    }
}

GaeResult gae_advantages(const Matrix& rewards, const Matrix& values, const Matrix& next_values,
                         const Matrix& dones, double gamma, double lambda) {
    const auto T = rewards.rows();
    const auto N = rewards.cols();
    if (values.rows() != T || values.cols() != N || next_values.rows() != T ||
        next_values.cols() != N || dones.rows() != T || dones.cols() != N) {
        fail(ErrorCode::ShapeMismatch, "GAE inputs differ in shape");
    }
    GaeResult r;
    r.advantages = Matrix::Zero(T, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        double running = 0.0;
        for (Eigen::Index t = T - 1; t >= 0; --t) {
            const double live = 1.0 - dones(t, i);
            const double delta = rewards(t, i) + gamma * live * next_values(t, i) - values(t, i);
            running = delta + gamma * lambda * live * running;
            r.advantages(t, i) = running;
        }
    }
    r.returns = r.advantages + values;
    return r;
}

GaeResult gae_advantages(const Matrix& rewards, const Matrix& values, const Vector& bootstrap,
                         const Matrix& dones, double gamma, double lambda) {
    const auto T = values.rows();
    if (bootstrap.size() != values.cols() || T < 1) {
        fail(ErrorCode::ShapeMismatch, "bootstrap does not match value columns");
    }
    Matrix next(T, values.cols());
    if (T > 1) {
        next.topRows(T - 1) = values.bottomRows(T - 1);
    }
    next.row(T - 1) = bootstrap.transpose();
    return gae_advantages(rewards, values, next, dones, gamma, lambda);
}

void normalize_in_place(Matrix& x) {
    if (x.size() == 0) {
        return;
    }
    const double mean = x.mean();
    x.array() -= mean;
    const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
    if (sd > 1e-12) {
        x /= sd;
    }
}

double ppo_clip_term(double ratio, double advantage, double clip) {
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * advantage, clipped * advantage);
}

double ppo_clip_grad(double ratio, double advantage, double clip) {
    const bool active = advantage >= 0.0 ? ratio <= 1.0 + clip : ratio >= 1.0 - clip;
    return active ? ratio * advantage : 0.0;
}

double ppo_clip_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                          double clip) {
    if (ratios.size() != advantages.size() || ratios.empty()) {
        fail(ErrorCode::ShapeMismatch, "surrogate inputs differ in size");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        s += ppo_clip_term(ratios[i], advantages[i], clip);
    }
    return s / static_cast<double>(ratios.size());
}

namespace {

void check_pair(const PolicyOutputs& a, const PolicyOutputs& b) {
    if (a.kind != b.kind) {
        fail(ErrorCode::MixedActionSpaces, "policies differ in action-space kind");
    }
    if (a.first.rows() != b.first.rows() || a.first.cols() != b.first.cols()) {
        fail(ErrorCode::ShapeMismatch, "policy batches differ in shape");
    }
    if (a.kind == PolicyKind::gaussian &&
        (a.log_std.rows() != a.first.rows() || a.log_std.cols() != a.first.cols() ||
         b.log_std.rows() != b.first.rows() || b.log_std.cols() != b.first.cols())) {
        fail(ErrorCode::ShapeMismatch, "gaussian log_std does not match its mean");
    }
}

}  // namespace

double mean_kl(const PolicyOutputs& peer, const PolicyOutputs& self) {
    check_pair(peer, self);
    const auto N = self.first.rows();
    if (N == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (Eigen::Index r = 0; r < N; ++r) {
        if (self.kind == PolicyKind::categorical) {
            total += nn::Categorical(row_span(peer.first, r)).kl(nn::Categorical(row_span(self.first, r)));
        } else {
            nn::DiagGaussian p(row_span(peer.first, r), row_span(peer.log_std, r));
            nn::DiagGaussian q(row_span(self.first, r), row_span(self.log_std, r));
            total += p.kl(q);
        }
    }
    return total / static_cast<double>(N);
}

DiversityTerm kl_diversity_penalty(const PolicyOutputs& self, std::span<const PolicyOutputs> peers,
                                   double lambda) {
    DiversityTerm d;
    const auto N = self.first.rows();
    const auto M = self.first.cols();
    d.d_first = Matrix::Zero(N, M);
    d.d_log_std = Matrix::Zero(self.log_std.rows(), self.log_std.cols());
    for (const auto& peer : peers) {
        check_pair(peer, self);
    }
    if (lambda == 0.0 || peers.empty() || N == 0) {
        return d;
    }
    const double scale = lambda / static_cast<double>(N);
    for (const auto& peer : peers) {
        d.penalty += lambda * mean_kl(peer, self);
        for (Eigen::Index r = 0; r < N; ++r) {
            if (self.kind == PolicyKind::categorical) {
                const auto p_self = nn::softmax(row_span(self.first, r));
                const auto p_peer = nn::softmax(row_span(peer.first, r));
                for (Eigen::Index c = 0; c < M; ++c) {
                    const auto k = static_cast<std::size_t>(c);
                    d.d_first(r, c) += scale * (p_self[k] - p_peer[k]);
                }
            } else {
                for (Eigen::Index c = 0; c < M; ++c) {
                    const double ls_i = nn::clamp_log_std(self.log_std(r, c));
                    const double ls_j = nn::clamp_log_std(peer.log_std(r, c));
                    const double var_i = std::exp(2.0 * ls_i);
                    const double var_j = std::exp(2.0 * ls_j);
                    const double diff = self.first(r, c) - peer.first(r, c);
                    d.d_first(r, c) += scale * diff / var_i;
                    d.d_log_std(r, c) += scale * (1.0 - (var_j + diff * diff) / var_i);
                }
            }
        }
    }
    return d;
}

}  // namespace vecfin::agents
