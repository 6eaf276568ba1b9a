#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/indicators.hpp"
#include "vecfin/data/synth.hpp"
#include "vecfin/env/vec_env.hpp"

using namespace vecfin;
using namespace vecfin::env;

namespace {

data::MarketFrame one_asset(std::vector<double> closes) {
    std::vector<std::int64_t> ts(closes.size());
    Matrix p(static_cast<Eigen::Index>(closes.size()), 1);
    for (std::size_t t = 0; t < closes.size(); ++t) {
        ts[t] = static_cast<std::int64_t>(t);
        p(static_cast<Eigen::Index>(t), 0) = closes[t];
    }
    return data::make_close_only_frame(ts, {"X"}, p);
}

Matrix mat(std::initializer_list<double> row) {
    Matrix m(1, static_cast<Eigen::Index>(row.size()));
    Eigen::Index j = 0;
    for (double v : row) m(0, j++) = v;
    return m;
}

Matrix random_actions(std::size_t N, std::size_t K, Rng& rng) {
    Matrix a(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = uniform(rng, -1.2, 1.2);
    return a;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset: wealth, dimension and determinism") {
    const auto f = data::compute_indicators(data::synth_series(data::SynthKind::gbm, 80, 3, 1), {});
    EnvConfig c;
    const auto s = reset(f, c, 4, 7);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s.wealth(i) == 1e6);
    }
    CHECK(s.state_dim() == (f.num_features() + 2) * 3 + 1);
    CHECK(reset(f, c, 4, 7) == s);
    const auto enc = encode_state(s, StateNormalizer::for_frame(f, c));
    CHECK(enc.cols() == static_cast<Eigen::Index>(s.state_dim()));
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(enc(i, 0) == 1.0);
        for (Eigen::Index k = 0; k < 3; ++k) {
            CHECK(enc(i, 1 + k) == 1.0);
            CHECK(enc(i, 4 + k) == 0.0);
        }
    }
    CHECK(encode_state(s, StateNormalizer::for_frame(f, c)) == enc);
}

TEST_CASE("state dimension is (I + 2) K + 1") {
    BatchState s;
    s.num_assets = 30;
    s.num_features = 7;
    CHECK(s.state_dim() == 271);
    s.num_assets = 1;
    s.num_features = 0;
    CHECK(s.state_dim() == 3);
}

TEST_CASE("reward formula") {
    std::vector<double> p0{10}, p1{11}, h{2};
    PortfolioView prev{100, p0, h};
    PortfolioView next{100, p1, h};
    CHECK(total_value(prev) == 120);
    CHECK(reward(prev, std::vector<double>{0}, next) == 2);
}

TEST_CASE("hold pays the price move") {
    const auto f = one_asset({20, 22, 19});
    EnvConfig c;
    auto s = reset(f, c, 1, 0);
    step(s, mat({0.05}), f, c);  // buys 5
    CHECK(s.holdings(0, 0) == 5);
    const auto out = step(s, mat({0.0}), f, c);
    CHECK(out.rewards[0] == doctest::Approx(5 * (19 - 22)).epsilon(1e-14));
}

TEST_CASE("affordability floor and sell clipping") {
    const auto f = one_asset({20, 20, 20});
    EnvConfig c;
    c.initial_cash = 100;
    auto s = reset(f, c, 1, 0);
    auto out = step(s, mat({0.10}), f, c);  // asks for 10 shares
    CHECK(out.executed(0, 0) == 5);
    CHECK(s.cash[0] == 0.0);
    s.holdings(0, 0) = 3;
    out = step(s, mat({-0.07}), f, c);
    CHECK(out.executed(0, 0) == -3);
    CHECK(s.holdings(0, 0) == 0);
}

TEST_CASE("cost of 10 bps on notional 1000 costs exactly 1") {
    const auto f = one_asset({10, 12});
    EnvConfig free;
    EnvConfig paid;
    paid.cost_bps = 10;
    auto a = reset(f, free, 1, 0);
    auto b = reset(f, paid, 1, 0);
    const auto ra = step(a, mat({1.0}), f, free);  // 100 shares x 10
    const auto rb = step(b, mat({1.0}), f, paid);
    CHECK(rb.executed(0, 0) == 100);
    CHECK(rb.fees(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ra.rewards[0] - rb.rewards[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slippage moves fills against the trader") {
    const auto f = one_asset({100, 100, 100});
    EnvConfig c;
    c.slippage_bps = 50;
    auto s = reset(f, c, 1, 0);
    auto out = step(s, mat({0.1}), f, c);
    CHECK(out.exec_prices(0, 0) == doctest::Approx(100.5));
    out = step(s, mat({-0.1}), f, c);
    CHECK(out.exec_prices(0, 0) == doctest::Approx(99.5));
}

TEST_CASE("decode_action") {
    EnvConfig c;
    CHECK(decode_action(mat({0.0}), c)(0, 0) == 0);
    CHECK(decode_action(mat({1.0}), c)(0, 0) == 100);
    CHECK(decode_action(mat({3.0}), c)(0, 0) == 100);
    CHECK(decode_action(mat({0.005}), c)(0, 0) == 1);
    CHECK(decode_action(mat({-0.005}), c)(0, 0) == -1);
    EnvConfig d;
    d.mode = ActionMode::discrete;
    d.lot_size = 2.5;
    CHECK(decode_action(mat({double(d.hold_index())}), d)(0, 0) == 0);
    CHECK(decode_action(mat({2.0}), d)(0, 0) == 2.5);
    CHECK_ERROR_CODE(decode_action(mat({3.0}), d), ErrorCode::IndexOutOfRange);
}

TEST_CASE("errors: finished episodes and non-finite actions") {
    const auto f = one_asset({10, 11});
    EnvConfig c;
    auto s = reset(f, c, 1, 0);
    CHECK_ERROR_CODE(step(s, mat({std::nan("")}), f, c), ErrorCode::NonFiniteAction);
    const auto out = step(s, mat({0.0}), f, c);
    CHECK(out.done[0] == 1);
    CHECK_ERROR_CODE(step(s, mat({0.0}), f, c), ErrorCode::EpisodeFinished);
    EnvConfig t;
    t.stop_loss = 0.1;
    CHECK_ERROR_CODE(t.validate(), ErrorCode::Unsupported);
}

TEST_CASE("property: telescoping, long-only, one done per episode") {
    const auto f = data::synth_series(data::SynthKind::gbm, 40, 3, 5);
    EnvConfig c;
    c.cost_bps = 7;
    c.slippage_bps = 3;
    c.initial_cash = 5000;
    Rng rng = make_rng(1, 2);
    for (int ep = 0; ep < 50; ++ep) {
        auto s = reset(f, c, 3, ep);
        std::vector<double> total(3, 0.0);
        std::vector<int> dones(3, 0);
        for (std::size_t t = 0; t + 1 < f.num_steps(); ++t) {
            const auto out = step(s, random_actions(3, 3, rng), f, c);
            for (std::size_t i = 0; i < 3; ++i) {
                total[i] += out.rewards[i];
                dones[i] += out.done[i];
                CHECK(s.cash[i] >= 0.0);
                for (std::size_t k = 0; k < 3; ++k) CHECK(s.holdings_of(i)[k] >= 0.0);
            }
        }
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::fabs(total[i] - (s.wealth(i) - c.initial_cash)) <= 1e-9);
            CHECK(dones[i] == 1);
        }
    }
}

TEST_CASE("property: zero cost makes reward equal the mark-to-market of new holdings") {
    const auto f = data::synth_series(data::SynthKind::gbm, 30, 2, 3);
    EnvConfig c;
    Rng rng = make_rng(3, 3);
    auto s = reset(f, c, 4, 0);
    for (std::size_t t = 0; t + 1 < f.num_steps(); ++t) {
        const Matrix p0 = s.prices;
        const auto out = step(s, random_actions(4, 2, rng), f, c);
        for (Eigen::Index i = 0; i < 4; ++i) {
            double pnl = 0.0;
            for (Eigen::Index k = 0; k < 2; ++k) pnl += s.holdings(i, k) * (s.prices(i, k) - p0(i, k));
            CHECK(std::fabs(out.rewards[static_cast<std::size_t>(i)] - pnl) <= 1e-12 * c.initial_cash);
        }
    }
}

TEST_CASE("property: batch equals per-env runs and is partition independent") {
    const auto f = data::compute_indicators(data::synth_series(data::SynthKind::gbm, 90, 2, 8), {});
    EnvConfig c;
    c.cost_bps = 10;
    const std::size_t N = 8;
    Rng rng = make_rng(5, 0);
    std::vector<Matrix> actions;
    for (std::size_t t = 0; t + 1 < f.num_steps(); ++t) actions.push_back(random_actions(N, 2, rng));

    ThreadPool pool(4);
    auto batch = reset(f, c, N, 11);
    auto pooled = reset(f, c, N, 11);
    std::vector<BatchState> single;
    for (std::size_t i = 0; i < N; ++i) single.push_back(batch.env(i));
    for (const auto& a : actions) {
        const auto out = step(batch, a, f, c);
        const auto out_p = step(pooled, a, f, c, &pool);
        CHECK(out.rewards == out_p.rewards);
        for (std::size_t i = 0; i < N; ++i) {
            const auto o = step(single[i], a.row(static_cast<Eigen::Index>(i)), f, c);
            CHECK(o.rewards[0] == out.rewards[i]);
        }
    }
    CHECK(batch == pooled);
    for (std::size_t i = 0; i < N; ++i) {
        CHECK(single[i] == batch.env(i));
    }
}

TEST_CASE("VecEnv reset_done restarts finished envs") {
    auto f = std::make_shared<const data::MarketFrame>(one_asset({10, 11, 12}));
    VecEnv v(f, EnvConfig{}, 2, 0);
    Matrix zero = Matrix::Zero(2, 1);
    CHECK(v.step(zero).done[0] == 0);
    const auto& out = v.step(zero);
    CHECK(out.done[0] == 1);
    CHECK(out.done[1] == 1);
    v.reset_done();
    CHECK(v.state().step_index[0] == 0);
    CHECK(v.state().step_index[1] == 0);
}

}  // TEST_SUITE
