#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/data/synth.hpp"
#include "vecfin/ensemble/ensemble.hpp"

using namespace vecfin;
using namespace vecfin::ensemble;

namespace {

env::EnvConfig discrete_env() {
    env::EnvConfig c;
    c.mode = env::ActionMode::discrete;
    c.lot_size = 10;
    return c;
}

/// DQN whose softmax(Q) is `probs` for every state.
std::shared_ptr<const agents::Agent> fixed_policy(const data::MarketFrame& f, std::vector<double> probs,
                                                  std::uint64_t seed) {
    auto cfg = agents::AgentConfig::stock_defaults(agents::AgentKind::dqn);
    cfg.hidden = {4};
    auto a = agents::make_agent(cfg, f, discrete_env(), seed);
    nn::Mlp& q = *a->networks()[0];
    for (auto& layer : q.layers) {
        layer.weight.setZero();
        layer.bias.setZero();
    }
    for (std::size_t j = 0; j < probs.size(); ++j) {
        q.layers.back().bias(static_cast<Eigen::Index>(j)) = probs[j] > 0 ? std::log(probs[j]) : -1e3;
    }
    return a;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("weights: equal sharpes, softmax, gating, fallback") {
    std::vector<double> eq{0.7, 0.7, 0.7, 0.7};
    const auto w = weights_from_sharpes(eq, 0.0, 1.0);
    for (double v : w.weights) CHECK(v == doctest::Approx(0.25));

    std::vector<double> two{1.0, 0.0};
    const auto w2 = weights_from_sharpes(two, 0.0, 1.0);
    CHECK(w2.weights[0] == doctest::Approx(0.731).epsilon(1e-3));
    CHECK(w2.weights[1] == doctest::Approx(0.269).epsilon(1e-3));

    std::vector<double> gated{0.5, -0.2, 1.5};
    const auto w3 = weights_from_sharpes(gated, 0.0, 1.0);
    CHECK(w3.weights[1] == 0.0);
    CHECK(w3.retained == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(w3.weights[0] + w3.weights[2] == doctest::Approx(1.0));

    std::vector<double> bad{-1.0, -0.5, -0.5};
    const auto w4 = weights_from_sharpes(bad, 0.0, 1.0);
    CHECK(w4.weights == std::vector<double>{0.0, 1.0, 0.0});

    std::vector<double> withnan{std::nan(""), 0.0};
    const auto w5 = weights_from_sharpes(withnan, 0.0, 1.0);
    CHECK(w5.weights[0] == doctest::Approx(0.5));

    const auto u = uniform_weights(3);
    for (double v : u.weights) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("weights: simplex, monotone, scale and temperature invariant") {
    Rng rng = make_rng(12, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + uniform_index(rng, 8);
        std::vector<double> s(m);
        for (auto& v : s) v = uniform(rng, -2, 3);
        const double thr = uniform(rng, -1, 1);
        const auto w = weights_from_sharpes(s, thr, 1.0);
        double sum = 0;
        for (double v : w.weights) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (w.retained[i] && w.retained[j] && s[i] > s[j]) CHECK(w.weights[i] >= w.weights[j]);
            }
        }
        const double c = uniform(rng, 0.2, 5.0);
        std::vector<double> sc(m);
        for (std::size_t i = 0; i < m; ++i) sc[i] = c * s[i];
        const auto wc = weights_from_sharpes(sc, c * thr, c);
        for (std::size_t i = 0; i < m; ++i) CHECK(wc.weights[i] == doctest::Approx(w.weights[i]).epsilon(1e-10));
    }
}

TEST_CASE("weighted policy action over discrete members") {
    const auto f = data::synth_series(data::SynthKind::sine, 20, 1, 1);
    const auto s = env::reset(f, discrete_env(), 2, 0);
    std::vector<std::shared_ptr<const agents::Agent>> members{fixed_policy(f, {0.6, 0.4, 0.0}, 1),
                                                              fixed_policy(f, {0.2, 0.8, 0.0}, 2)};
    const auto a = weighted_policy_action(members, uniform_weights(2), s);
    CHECK(a.rows() == 2);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(1, 0) == 1.0);

    AgentWeights lean;
    lean.weights = {0.9, 0.1};
    lean.retained = {1, 1};
    CHECK(weighted_policy_action(members, lean, s)(0, 0) == 0.0);

    std::vector<std::shared_ptr<const agents::Agent>> one{fixed_policy(f, {0.1, 0.3, 0.6}, 3)};
    const auto single = weighted_policy_action(one, uniform_weights(1), s);
    CHECK(single == one[0]->greedy(one[0]->encode(s)));
}

TEST_CASE("weighted policy action over continuous members") {
    const auto f = data::synth_series(data::SynthKind::gbm, 20, 3, 1);
    env::EnvConfig c;
    const auto s = env::reset(f, c, 2, 0);
    std::vector<std::shared_ptr<const agents::Agent>> members;
    for (int i = 0; i < 3; ++i) {
        auto cfg = agents::AgentConfig::stock_defaults(agents::AgentKind::ppo);
        auto a = agents::make_agent(cfg, f, c, static_cast<std::uint64_t>(i));
        for (auto* net : a->networks()) {
            for (auto& layer : net->layers) {
                layer.weight.setZero();
                layer.bias.setZero();
            }
        }
        members.push_back(std::move(a));
    }
    CHECK(weighted_policy_action(members, uniform_weights(3), s).isZero());

    auto big = agents::make_agent(agents::AgentConfig::stock_defaults(agents::AgentKind::ppo), f, c, 9);
    for (auto& layer : big->networks()[0]->layers) {
        layer.weight.setZero();
        layer.bias.setConstant(0.9);
    }
    std::vector<std::shared_ptr<const agents::Agent>> two{members[0], std::move(big)};
    AgentWeights w;
    w.weights = {0.5, 0.5};
    w.retained = {1, 1};
    const auto a = weighted_policy_action(two, w, s);
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 3);
    const bool expected = a.cwiseAbs().maxCoeff() <= 1.0;
    CHECK(expected);
}

TEST_CASE("majority vote examples") {
    const std::array<int, 3> values{-1, 0, 1};
    std::vector<std::size_t> v1{2, 2, 0};
    CHECK(majority_vote(v1, values) == 2);
    std::vector<std::size_t> v2{0, 1, 2};
    CHECK(majority_vote(v2, values) == 1);
    std::vector<std::size_t> v3{0, 2};
    CHECK(majority_vote(v3, values) == 0);
    std::vector<std::size_t> v4{2, 0, 0, 2};
    CHECK(majority_vote(v4, values) == 0);
    const std::array<int, 2> pos{1, 2};
    std::vector<std::size_t> v5{0, 1};
    CHECK(majority_vote(v5, pos) == 0);
}

TEST_CASE("majority vote: exhaustive over three voters") {
    const std::array<int, 3> values{-1, 0, 1};
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            for (std::size_t c = 0; c < 3; ++c) {
                std::array<std::size_t, 3> votes{a, b, c};
                const std::size_t winner = majority_vote(votes, values);
                std::array<int, 3> counts{};
                for (auto v : votes) counts[v]++;
                const int top = *std::max_element(counts.begin(), counts.end());
                CHECK(counts[winner] == top);
                if (top >= 2) CHECK(counts[winner] >= 2);
                if (top == 1) CHECK(winner == 1);
                std::sort(votes.begin(), votes.end());
                do {
                    CHECK(majority_vote(votes, values) == winner);
                } while (std::next_permutation(votes.begin(), votes.end()));
            }
        }
    }
}

TEST_CASE("condorcet probability") {
    CHECK(condorcet_probability(1, 0.73) == doctest::Approx(0.73).epsilon(1e-14));
    CHECK(std::fabs(condorcet_probability(3, 0.6) - 0.648) <= 1e-12);
    CHECK(condorcet_probability(5, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_ERROR_CODE(condorcet_probability(4, 0.6), ErrorCode::InvalidArgument);
    CHECK(condorcet_probability(101, 0.6) > 0.97);
    double prev = 0.0;
    for (std::size_t n = 1; n <= 51; n += 2) {
        const double p = condorcet_probability(n, 0.6);
        CHECK(p >= prev);
        prev = p;
        CHECK(std::fabs(p - oracle::majority_tail_dp(n, 0.6)) <= 1e-12);
    }
    for (double q : {0.1, 0.35, 0.55, 0.9}) {
        for (std::size_t n : {3u, 7u, 21u, 55u}) {
            CHECK(std::fabs(condorcet_probability(n, q) - oracle::majority_tail_dp(n, q)) <= 1e-12);
        }
    }
}

TEST_CASE("validation needs at least two rows") {
    const auto f = data::synth_series(data::SynthKind::sine, 20, 1, 1);
    EnsembleSpec spec;
    spec.members = {fixed_policy(f, {0.2, 0.3, 0.5}, 1)};
    spec.rule = Rule::majority_vote;
    CHECK_ERROR_CODE(validate_and_weight(spec, f.slice(0, 1), discrete_env()), ErrorCode::EmptyValidationWindow);
    const auto w = validate_and_weight(spec, f.slice(0, 10), discrete_env());
    CHECK(w.weights.size() == 1);
    CHECK(w.weights[0] == 1.0);
}

TEST_CASE("ensemble policy acts with its rule") {
    const auto f = data::synth_series(data::SynthKind::sine, 20, 1, 1);
    EnsembleSpec spec;
    spec.members = {fixed_policy(f, {0.1, 0.1, 0.8}, 1), fixed_policy(f, {0.1, 0.1, 0.8}, 2),
                    fixed_policy(f, {0.8, 0.1, 0.1}, 3)};
    spec.rule = Rule::majority_vote;
    EnsemblePolicy pol(spec, uniform_weights(3));
    const auto s = env::reset(f, discrete_env(), 3, 0);
    const auto a = pol.act(s);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(a(i, 0) == 2.0);
}

TEST_CASE("presets") {
    const auto p = preset("ensemble-2", "stock");
    CHECK(p.per_kind == 5);
    CHECK(p.rule == Rule::weighted_average);
    CHECK(p.kinds.size() == 3);
    const auto c = preset("ensemble-2", "crypto");
    CHECK(c.per_kind == 3);
    CHECK(c.rule == Rule::majority_vote);
    CHECK(preset("ensemble-3", "crypto").per_kind == 10);
    CHECK_ERROR_CODE(preset("ensemble-4", "stock"), ErrorCode::ConfigError);
    CHECK(parse_rule(to_string(Rule::majority_vote)) == Rule::majority_vote);
}

}  // TEST_SUITE
