#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecfin/common/matrix.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/nn/mlp.hpp"

namespace vecfin::agents {

/// With probability epsilon a uniform index, else argmax (lowest index wins ties).
std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng);
std::size_t argmax(std::span<const double> values);

/// y = r + gamma (1 - done) max_a q_next_target(s', a)
Vector dqn_targets(const Vector& rewards, const Vector& dones, const Matrix& q_next_target,
                   double gamma);
/// y = r + gamma (1 - done) q_next_target(s', argmax_a q_next_online(s', a))
Vector double_dqn_targets(const Vector& rewards, const Vector& dones,
                          const Matrix& q_next_online, const Matrix& q_next_target, double gamma);
/// y = r + gamma (1 - done) q_next
Vector bootstrap_targets(const Vector& rewards, const Vector& dones, const Vector& q_next,
                         double gamma);
/// y = r + gamma (1 - done) (min(q1, q2) - alpha log_prob)
Vector sac_targets(const Vector& rewards, const Vector& dones, const Vector& q1_next,
                   const Vector& q2_next, const Vector& log_prob_next, double gamma, double alpha);

/// Q = V + A - mean_a A
Matrix dueling_combine(const Matrix& value, const Matrix& advantage);

/// Q network; plain nets use `body` alone, dueling nets add the two heads on
/// top of a shared trunk.
struct QNetwork {
    bool dueling = false;
    nn::Mlp body;
    nn::Mlp value;
    nn::Mlp advantage;

    std::size_t input_size() const { return body.input_size(); }
    std::size_t num_actions() const {
        return dueling ? advantage.output_size() : body.output_size();
    }
};

bool operator==(const QNetwork& a, const QNetwork& b);

QNetwork make_q_network(std::size_t state_dim, std::span<const std::size_t> hidden,
                        std::size_t num_actions, bool dueling, nn::Activation activation,
                        std::uint64_t seed);

struct QCache {
    nn::ForwardCache body;
    nn::ForwardCache value;
    nn::ForwardCache advantage;
};

Matrix q_forward(const QNetwork& net, const Matrix& x, QCache* cache = nullptr);
/// Same as q_forward for a dueling net.
Matrix dueling_forward(const QNetwork& net, const Matrix& x);

struct QGradients {
    nn::Gradients body;
    nn::Gradients value;
    nn::Gradients advantage;
};

QGradients q_backward(const QNetwork& net, const QCache& cache, const Matrix& dq);
void q_soft_update(QNetwork& target, const QNetwork& source, double tau);

struct GaeResult {
    Matrix advantages;
    Matrix returns;
};

/// T x N recursive GAE. next_values[t] is V(s_{t+1}) as stored with the
/// transition, so a done step bootstraps nothing and the recursion restarts.
GaeResult gae_advantages(const Matrix& rewards, const Matrix& values, const Matrix& next_values,
                         const Matrix& dones, double gamma, double lambda);
/// Variant with V(s_{t+1}) = values[t + 1] and `bootstrap` for the last row.
GaeResult gae_advantages(const Matrix& rewards, const Matrix& values, const Vector& bootstrap,
                         const Matrix& dones, double gamma, double lambda);

/// Rescales to mean 0, std 1 (population). Leaves a constant input centred only.
void normalize_in_place(Matrix& x);

/// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)
double ppo_clip_term(double ratio, double advantage, double clip);
/// d term / d log_prob: ratio * adv on the unclipped branch, else 0.
double ppo_clip_grad(double ratio, double advantage, double clip);
/// Mean of ppo_clip_term over the batch.
double ppo_clip_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                          double clip);

enum class PolicyKind { categorical, gaussian };

/// A batch of policy distributions: logits (N x m) or means and log-stds (N x K).
struct PolicyOutputs {
    PolicyKind kind = PolicyKind::categorical;
    Matrix first;
    Matrix log_std;
};

/// Mean over rows of KL(peer || self).
double mean_kl(const PolicyOutputs& peer, const PolicyOutputs& self);

struct DiversityTerm {
    /// lambda * sum_j mean_s KL(pi_j || pi_i)
    double penalty = 0.0;
    /// d penalty / d self.first
    Matrix d_first;
    /// d penalty / d self.log_std, zero for categorical heads.
    Matrix d_log_std;
};

/// The learner subtracts `penalty` from the loss it minimizes, so it should
/// subtract the returned gradients too. Peers are constants here.
DiversityTerm kl_diversity_penalty(const PolicyOutputs& self, std::span<const PolicyOutputs> peers,
                                   double lambda);

}  // namespace vecfin::agents
