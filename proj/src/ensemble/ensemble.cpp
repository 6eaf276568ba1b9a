#include "vecfin/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "vecfin/backtest/metrics.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::ensemble {

Rule parse_rule(const std::string& name) {
    if (name == "weighted_average") return Rule::weighted_average;
    if (name == "majority_vote") return Rule::majority_vote;
    fail(ErrorCode::ConfigError, "unknown ensemble rule '" + name + "'");
}

std::string to_string(Rule rule) {
    return rule == Rule::weighted_average ? "weighted_average" : "majority_vote";
}

void EnsembleSpec::validate() const {
    if (members.empty()) {
        fail(ErrorCode::ConfigError, "an ensemble needs at least one member");
    }
    if (!(temperature > 0.0)) {
        fail(ErrorCode::ConfigError, "ensemble temperature must be > 0");
    }
    const bool discrete = members.front()->discrete();
    for (const auto& m : members) {
        if (!m) {
            fail(ErrorCode::ConfigError, "null ensemble member");
        }
        if (m->discrete() != discrete) {
            fail(ErrorCode::MixedActionSpaces, "ensemble members differ in action-space kind");
        }
        if (m->state_dim() != members.front()->state_dim() ||
            m->policy_dim() != members.front()->policy_dim()) {
            fail(ErrorCode::ShapeMismatch, "ensemble members differ in state or action shape");
        }
    }
    if (rule == Rule::majority_vote && !discrete) {
        fail(ErrorCode::MixedActionSpaces, "majority vote needs discrete members");
    }
}

AgentWeights weights_from_sharpes(std::span<const double> sharpes, double discard_threshold,
                                  double temperature) {
    if (sharpes.empty()) {
        fail(ErrorCode::InvalidArgument, "no Sharpe ratios to weight");
    }
    if (!(temperature > 0.0)) {
        fail(ErrorCode::InvalidArgument, "temperature must be > 0");
    }
    const std::size_t m = sharpes.size();
    AgentWeights w;
    w.sharpes.assign(sharpes.begin(), sharpes.end());
    w.weights.assign(m, 0.0);
    w.retained.assign(m, 0);
    std::vector<double> score(m);
    for (std::size_t i = 0; i < m; ++i) {
        score[i] = std::isnan(sharpes[i]) ? 0.0 : sharpes[i];
        w.retained[i] = score[i] >= discard_threshold ? 1 : 0;
    }
    if (std::none_of(w.retained.begin(), w.retained.end(), [](auto r) { return r != 0; })) {
        const auto best = std::max_element(score.begin(), score.end()) - score.begin();
        w.retained[static_cast<std::size_t>(best)] = 1;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        if (w.retained[i]) {
            top = std::max(top, score[i] / temperature);
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (w.retained[i]) {
            // +inf Sharpes share the mass equally.
            const double z = score[i] / temperature;
            w.weights[i] = std::isinf(top) ? (z == top ? 1.0 : 0.0) : std::exp(z - top);
            total += w.weights[i];
        }
    }
    for (double& x : w.weights) {
        x /= total;
    }
    return w;
}

AgentWeights uniform_weights(std::size_t members) {
    if (members == 0) {
        fail(ErrorCode::InvalidArgument, "no members to weight");
    }
    AgentWeights w;
    w.weights.assign(members, 1.0 / static_cast<double>(members));
    w.retained.assign(members, 1);
    w.sharpes.assign(members, std::numeric_limits<double>::quiet_NaN());
    return w;
}

AgentWeights validate_and_weight(const EnsembleSpec& spec, const data::MarketFrame& val_frame,
                                 const env::EnvConfig& config, double periods_per_year) {
    spec.validate();
    if (val_frame.num_steps() < 2) {
        fail(ErrorCode::EmptyValidationWindow, "validation window needs at least two rows");
    }
    std::vector<double> sharpes;
    for (const auto& member : spec.members) {
        agents::check_compatible(*member, (val_frame.num_features() + 2) * val_frame.num_assets() + 1,
                                 config);
        const backtest::AgentPolicy policy(member);
        const auto run = backtest::run_policy(policy, val_frame, config);
        sharpes.push_back(
            backtest::compute_metrics(run.curve, run.trades, 0.0, periods_per_year).sharpe);
    }
    return weights_from_sharpes(sharpes, spec.discard_threshold, spec.temperature);
}

Matrix weighted_policy_action(std::span<const std::shared_ptr<const agents::Agent>> members,
                              const AgentWeights& weights, const env::BatchState& state) {
    if (members.empty() || weights.weights.size() != members.size()) {
        fail(ErrorCode::ShapeMismatch, "weights must align with ensemble members");
    }
    const bool discrete = members.front()->discrete();
    Matrix mix;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = *members[i];
        if (m.discrete() != discrete) {
            fail(ErrorCode::MixedActionSpaces, "ensemble members differ in action-space kind");
        }
        const double w = weights.weights[i];
        if (w == 0.0) {
            continue;
        }
        const Matrix enc = m.encode(state);
        const Matrix part = discrete ? m.action_probs(enc) : m.mean_action(enc);
        if (mix.size() == 0) {
            mix = Matrix::Zero(part.rows(), part.cols());
        }
        mix += w * part;
    }
    if (mix.size() == 0) {
        fail(ErrorCode::InvalidArgument, "every ensemble weight is zero");
    }
    if (!discrete) {
        return mix.cwiseMax(-1.0).cwiseMin(1.0);
    }
    Matrix a(mix.rows(), 1);
    for (Eigen::Index r = 0; r < mix.rows(); ++r) {
        a(r, 0) = static_cast<double>(agents::argmax(
            {mix.data() + r * mix.cols(), static_cast<std::size_t>(mix.cols())}));
    }
    return a;
}

std::size_t majority_vote(std::span<const std::size_t> votes, std::span<const int> action_values) {
    if (votes.empty()) {
        fail(ErrorCode::InvalidArgument, "majority vote needs at least one vote");
    }
    std::vector<std::size_t> count(action_values.size(), 0);
    for (auto v : votes) {
        if (v >= count.size()) {
            fail(ErrorCode::IndexOutOfRange, "vote index out of range");
        }
        ++count[v];
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < count.size(); ++a) {
        if (count[a] > count[best] ||
            (count[a] == count[best] && std::abs(action_values[a]) < std::abs(action_values[best]))) {
            best = a;
        }
    }
    return best;
}

double condorcet_probability(std::size_t n, double p) {
    if (n < 1 || n % 2 == 0) {
        fail(ErrorCode::InvalidArgument, "condorcet_probability needs an odd n >= 1");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "p must lie in [0, 1]");
    }
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    const double nn = static_cast<double>(n);
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    std::vector<double> terms;
    for (std::size_t k = n / 2 + 1; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        terms.push_back(std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) +
                        kk * lp + (nn - kk) * lq);
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) {
        s += std::exp(t - top);
    }
    return std::min(1.0, std::exp(top + std::log(s)));
}

EnsemblePolicy::EnsemblePolicy(EnsembleSpec spec, AgentWeights weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
    spec_.validate();
    if (weights_.weights.size() != spec_.members.size()) {
        fail(ErrorCode::ShapeMismatch, "weights must align with ensemble members");
    }
}

Matrix EnsemblePolicy::act(const env::BatchState& state) const {
    if (spec_.rule == Rule::weighted_average) {
        return weighted_policy_action(spec_.members, weights_, state);
    }
    const auto& values = spec_.members.front()->env_config().discrete_actions;
    std::vector<Matrix> picks;
    for (const auto& m : spec_.members) {
        picks.push_back(m->greedy(m->encode(state)));
    }
    Matrix a(static_cast<Eigen::Index>(state.num_envs), 1);
    std::vector<std::size_t> votes(picks.size());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (std::size_t i = 0; i < picks.size(); ++i) {
            votes[i] = static_cast<std::size_t>(picks[i](r, 0));
        }
        a(r, 0) = static_cast<double>(majority_vote(votes, values));
    }
    return a;
}

Preset preset(const std::string& name, const std::string& task) {
    const std::map<std::string, std::size_t> stock{
        {"ensemble-1", 1}, {"ensemble-2", 5}, {"ensemble-3", 10}};
    const std::map<std::string, std::size_t> crypto{
        {"ensemble-1", 1}, {"ensemble-2", 3}, {"ensemble-3", 10}};
    Preset p;
    p.name = name;
    if (task == "stock") {
        auto it = stock.find(name);
        if (it == stock.end()) {
            fail(ErrorCode::ConfigError, "unknown ensemble preset '" + name + "'");
        }
        p.rule = Rule::weighted_average;
        p.kinds = {agents::AgentKind::ppo, agents::AgentKind::sac, agents::AgentKind::ddpg};
        p.per_kind = it->second;
    } else if (task == "crypto") {
        auto it = crypto.find(name);
        if (it == crypto.end()) {
            fail(ErrorCode::ConfigError, "unknown ensemble preset '" + name + "'");
        }
        p.rule = Rule::majority_vote;
        p.kinds = {agents::AgentKind::dqn, agents::AgentKind::double_dqn,
                   agents::AgentKind::dueling_dqn};
        p.per_kind = it->second;
    } else {
        fail(ErrorCode::ConfigError, "task must be stock or crypto, got '" + task + "'");
    }
    return p;
}

std::vector<std::string> preset_names() { return {"ensemble-1", "ensemble-2", "ensemble-3"}; }

}  // namespace vecfin::ensemble
