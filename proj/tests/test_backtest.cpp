#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "vecfin/backtest/metrics.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/backtest/rolling.hpp"
#include "vecfin/backtest/simulate.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/data/synth.hpp"

using namespace vecfin;
using namespace vecfin::backtest;

namespace {

EquityCurve curve_of(std::vector<double> w) {
    EquityCurve c;
    for (std::size_t t = 0; t < w.size(); ++t) c.append(static_cast<std::int64_t>(t), w[t]);
    return c;
}

data::MarketFrame one_asset(std::vector<double> closes) {
    std::vector<std::int64_t> ts(closes.size());
    Matrix p(static_cast<Eigen::Index>(closes.size()), 1);
    for (std::size_t t = 0; t < closes.size(); ++t) {
        ts[t] = static_cast<std::int64_t>(100 + t);
        p(static_cast<Eigen::Index>(t), 0) = closes[t];
    }
    return data::make_close_only_frame(ts, {"X"}, p);
}

void check_against_oracle(const MetricsReport& m, const oracle::Metrics& o, double rel) {
    CHECK(oracle::close_rel(m.cumulative_return, o.cumulative_return, rel));
    CHECK(oracle::close_rel(m.annual_return, o.annual_return, rel));
    CHECK(oracle::close_rel(m.annual_volatility, o.annual_volatility, rel));
    CHECK(oracle::close_rel(m.sharpe, o.sharpe, rel));
    CHECK(oracle::close_rel(m.sortino, o.sortino, rel));
    CHECK(oracle::close_rel(m.max_drawdown, o.max_drawdown, rel));
    CHECK(oracle::close_rel(m.romad, o.romad, rel));
    CHECK(oracle::close_rel(m.calmar, o.calmar, rel));
    CHECK(oracle::close_rel(m.omega, o.omega, rel));
    CHECK(oracle::close_rel(m.win_loss_ratio, o.win_loss_ratio, rel));
}

RollingConfig small_rolling() {
    RollingConfig rc;
    rc.env.mode = env::ActionMode::discrete;
    rc.env.lot_size = 50;
    rc.env.cost_bps = 10;
    rc.schedule = agents::TrainSchedule{2, 8, 2};
    auto cfg = agents::AgentConfig::stock_defaults(agents::AgentKind::dqn);
    cfg.hidden = {8};
    cfg.batch_size = 8;
    cfg.updates_per_epoch = 2;
    rc.members = {{"dqn_a", cfg, 1}, {"dqn_b", cfg, 2}};
    rc.ensembles = {{"vote", ensemble::Rule::majority_vote, {0, 1}, 0.0, 1.0},
                    {"mix", ensemble::Rule::weighted_average, {0, 1}, 0.0, 1.0}};
    rc.master_seed = 17;
    return rc;
}

}  // namespace

TEST_SUITE("backtest") {

TEST_CASE("metrics: drawdown, cumulative return, romad") {
    const auto m = compute_metrics(curve_of({1.0, 1.2, 0.9, 1.1}), TradeLog{});
    CHECK(m.max_drawdown == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(m.cumulative_return == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(m.romad == doctest::Approx(0.4).epsilon(1e-13));
    const auto dd = drawdown_curve(curve_of({1.0, 1.2, 0.9, 1.1}));
    CHECK(dd[0] == 0.0);
    CHECK(dd[1] == 0.0);
    CHECK(dd[2] == doctest::Approx(-0.25));
    CHECK(dd[3] == doctest::Approx(1.1 / 1.2 - 1.0));
}

TEST_CASE("metrics: omega on a toy series") {
    // Returns +0.1, -0.05, +0.0: gains 0.1, losses 0.05.
    const auto m = compute_metrics(curve_of({1.0, 1.1, 1.045, 1.045}), TradeLog{});
    CHECK(m.omega == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("metrics: constant curve produces flagged sentinels") {
    const auto m = compute_metrics(curve_of({5.0, 5.0, 5.0, 5.0}), TradeLog{});
    CHECK(m.cumulative_return == 0.0);
    CHECK(m.max_drawdown == 0.0);
    CHECK(std::isnan(m.sharpe));
    CHECK(std::isnan(m.romad));
    CHECK(std::isnan(m.omega));
    CHECK(!m.flags.empty());
    CHECK_ERROR_CODE(compute_metrics(curve_of({1.0}), TradeLog{}), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(compute_metrics(curve_of({1.0, -1.0}), TradeLog{}), ErrorCode::InvalidArgument);
}

TEST_CASE("metrics match the independent oracle on random curves") {
    Rng rng = make_rng(21, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        std::vector<double> w{1000.0};
        for (std::size_t t = 1; t < n; ++t) w.push_back(w.back() * (1.0 + uniform(rng, -0.05, 0.06)));
        TradeLog log;
        std::vector<oracle::Trade> trades;
        double held = 0;
        for (int k = 0; k < 10; ++k) {
            const bool sell = held > 0 && uniform01(rng) < 0.5;
            const double q = sell ? -std::min(held, std::floor(uniform(rng, 1, 8))) : std::floor(uniform(rng, 1, 8));
            const double price = uniform(rng, 50, 150);
            const double fee = std::fabs(q) * price * 1e-3;
            held += q;
            log.record({k, 0, q, price, fee});
            trades.push_back({0, q, price, fee});
        }
        const double rf = uniform(rng, 0.0, 0.05);
        check_against_oracle(compute_metrics(curve_of(w), log, rf, 252.0), oracle::metrics(w, trades, rf, 252.0),
                             1e-9);
    }
}

TEST_CASE("trade log: FIFO round trips") {
    TradeLog log;
    log.record({0, 0, 10, 10.0, 1.0});
    log.record({1, 0, 10, 12.0, 0.0});
    log.record({2, 0, -15, 11.0, 1.5});
    const auto trips = log.round_trips();
    REQUIRE(trips.size() == 1);
    // Cost: 10 * 10.1 + 5 * 12 = 161; proceeds 165 - 1.5.
    CHECK(trips[0].pnl == doctest::Approx(165.0 - 1.5 - 161.0));
    CHECK(trips[0].quantity == 15);
}

TEST_CASE("simulation: telescoping, hold is flat, liquidation") {
    const auto f = data::synth_series(data::SynthKind::gbm, 50, 2, 4);
    env::EnvConfig c;
    c.cost_bps = 10;
    const HoldPolicy hold(c);
    const auto h = run_policy(hold, f, c);
    CHECK(h.curve.size() == f.num_steps());
    for (double w : h.curve.wealth) CHECK(w == c.initial_cash);
    CHECK(h.trades.size() == 0);

    auto agent = agents::make_agent(agents::AgentConfig::stock_defaults(agents::AgentKind::ppo), f, c, 3);
    const AgentPolicy pol(std::shared_ptr<const agents::Agent>(std::move(agent)));
    const auto run = run_policy(pol, f, c);
    CHECK(run.curve.timestamps == f.timestamps);
    double zero = 0.0;
    for (const auto& fill : run.trades.fills()) zero += fill.fee;
    CHECK(zero >= 0.0);
    CHECK(run.curve.wealth.back() > 0.0);

    const auto free_run = run_policy(pol, f, env::EnvConfig{}, false);
    CHECK(free_run.curve.size() == f.num_steps());
}

TEST_CASE("buy and hold baseline") {
    env::EnvConfig c;
    const auto up = one_asset({10, 15, 20});
    const auto bh = buy_and_hold_baseline(up, c);
    CHECK(bh.wealth.back() / bh.wealth.front() - 1.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bh.wealth[1] == doctest::Approx(1.5e6));

    c.cost_bps = 10;
    const auto flat = buy_and_hold_baseline(one_asset({10, 10, 10}), c);
    CHECK(flat.wealth.back() < c.initial_cash);
    CHECK(flat.wealth.back() == doctest::Approx(c.initial_cash / (1 + 1e-3)).epsilon(1e-9));

    const auto f2 = data::synth_series(data::SynthKind::gbm, 30, 3, 9);
    env::EnvConfig free;
    const auto b2 = buy_and_hold_baseline(f2, free);
    double expected = 0.0;
    for (std::size_t k = 0; k < 3; ++k) expected += free.initial_cash / 3 * f2.price(29, k) / f2.price(0, k);
    CHECK(b2.wealth.back() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("rolling backtest: tiling, baselines, determinism") {
    const auto f = data::synth_series(data::SynthKind::sine, 60, 1, 2);
    const auto sched = data::make_windows(60, 30, 5, 5, 5);
    const auto rc = small_rolling();
    const auto res = run_rolling(f, sched, rc);
    REQUIRE(res.size() == 6);
    std::vector<std::string> names;
    for (const auto& r : res) names.push_back(r.name);
    CHECK(names == std::vector<std::string>{"dqn_a", "dqn_b", "vote", "mix", "buy_and_hold", "hold"});
    const std::size_t first = sched.windows.front().test.begin;
    for (const auto& r : res) {
        CAPTURE(r.name);
        REQUIRE(r.curve.size() == 60 - first + 1);
        for (std::size_t t = 0; t < r.curve.size(); ++t) {
            CHECK(r.curve.timestamps[t] == f.timestamps[first - 1 + t]);
        }
        CHECK(std::isfinite(r.metrics.cumulative_return));
    }
    CHECK(res[5].metrics.cumulative_return == 0.0);
    CHECK(res[2].window_weights.size() == sched.windows.size());
    CHECK(res[3].window_weights.size() == sched.windows.size());

    const auto again = run_rolling(f, sched, rc);
    for (std::size_t i = 0; i < res.size(); ++i) {
        CHECK(res[i].curve.wealth == again[i].curve.wealth);
    }
}

TEST_CASE("rolling backtest: rows after the schedule do not matter") {
    auto f = data::synth_series(data::SynthKind::sine, 70, 1, 2);
    const auto sched = data::make_windows(60, 30, 5, 5, 5);
    auto g = f;
    for (Eigen::Index t = 60; t < 70; ++t) g.prices(t, 0) = 1000.0 + double(t);
    g.open = g.high = g.low = g.prices;
    f.open = f.high = f.low = f.prices;
    const auto rc = small_rolling();
    const auto a = run_rolling(f, sched, rc);
    const auto b = run_rolling(g, sched, rc);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].curve.wealth == b[i].curve.wealth);
}

TEST_CASE("report io round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "vecfin_test_report_io";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto curve = curve_of({1.0, 1.25, 0.875, 1.0 / 3.0});
    const auto m = compute_metrics(curve, TradeLog{});
    write_metrics_json(dir / "m.json", "s", m);
    std::string name;
    const auto back = read_metrics_json(dir / "m.json", &name);
    CHECK(name == "s");
    for (const auto& key : metric_names()) {
        const double x = metric_value(m, key), y = metric_value(back, key);
        CHECK((x == y || (std::isnan(x) && std::isnan(y))));
    }
    write_equity_csv(dir / "e.csv", curve);
    const auto c2 = read_equity_csv(dir / "e.csv");
    CHECK(c2.wealth == curve.wealth);
    CHECK(c2.timestamps == curve.timestamps);
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(metric_names().size() == 10);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
