// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is 0 when every selected criterion passes, 77 when a criterion cannot run
// on this machine, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"
#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/metrics.hpp"
#include "vecfin/backtest/simulate.hpp"
#include "vecfin/cli/commands.hpp"
#include "vecfin/cli/config.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/data/indicators.hpp"
#include "vecfin/data/synth.hpp"
#include "vecfin/ensemble/ensemble.hpp"
#include "vecfin/env/vec_env.hpp"

using namespace vecfin;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::fail;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double sample_std(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= double(x.size());
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / double(x.size() - 1));
}

double cum_return(const backtest::EquityCurve& c) { return c.wealth.back() / c.wealth.front() - 1.0; }

data::MarketFrame sawtooth(std::size_t T) {
    data::SynthParams p;
    p.amplitude = 10;
    p.period = 20;
    return data::synth_series(data::SynthKind::sawtooth, T, 1, 0, p);
}

// 1. Metrics against a scalar-loop oracle.
Outcome c1() {
    const auto t0 = Clock::now();
    Rng rng = make_rng(2024, 1);
    double worst = 0.0;
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w{uniform(rng, 1e3, 1e6)};
        for (int t = 1; t < 50; ++t) w.push_back(w.back() * (1.0 + uniform(rng, -0.04, 0.045)));
        backtest::EquityCurve curve;
        for (std::size_t t = 0; t < w.size(); ++t) curve.append(static_cast<std::int64_t>(t), w[t]);
        backtest::TradeLog log;
        std::vector<oracle::Trade> trades;
        std::vector<double> held(3, 0.0);
        for (int k = 0; k < 20; ++k) {
            const std::size_t asset = uniform_index(rng, 3);
            double q = std::floor(uniform(rng, 1, 10));
            if (held[asset] > 0 && uniform01(rng) < 0.5) q = -std::min(held[asset], q);
            const double price = uniform(rng, 20, 200);
            const double fee = std::fabs(q) * price * 1e-3;
            held[asset] += q;
            log.record({k, asset, q, price, fee});
            trades.push_back({asset, q, price, fee});
        }
        const double rf = uniform(rng, 0.0, 0.04);
        const auto m = backtest::compute_metrics(curve, log, rf, 252.0);
        const auto o = oracle::metrics(w, trades, rf, 252.0);
        const double got[] = {m.cumulative_return, m.annual_return, m.annual_volatility, m.sharpe, m.sortino,
                              m.max_drawdown,      m.romad,         m.calmar,            m.omega,  m.win_loss_ratio};
        const double want[] = {o.cumulative_return, o.annual_return, o.annual_volatility, o.sharpe, o.sortino,
                               o.max_drawdown,      o.romad,         o.calmar,            o.omega,  o.win_loss_ratio};
        for (int i = 0; i < 10; ++i) {
            if (!oracle::close_rel(got[i], want[i], 1e-9)) ++mismatches;
            if (std::isfinite(got[i]) && std::isfinite(want[i]) && want[i] != 0.0) {
                worst = std::max(worst, std::fabs(got[i] - want[i]) / std::fabs(want[i]));
            }
        }
    }
    const double secs = seconds_since(t0);
    return verdict(mismatches == 0 && secs < 5.0,
                   fmt("mismatches=%d max_rel_err=%.3g time=%.2fs", mismatches, worst, secs));
}

// 2. Condorcet tail and simulated vote.
Outcome c2() {
    const auto t0 = Clock::now();
    const double p3 = ensemble::condorcet_probability(3, 0.6);
    const double exact = ensemble::condorcet_probability(101, 0.6);
    Rng rng = make_rng(7, 2);
    const std::vector<int> values{-1, 1};
    const int trials = 10000;
    int correct = 0;
    std::vector<std::size_t> votes(101);
    for (int t = 0; t < trials; ++t) {
        for (auto& v : votes) v = uniform01(rng) < 0.6 ? 1 : 0;
        correct += ensemble::majority_vote(votes, values) == 1;
    }
    const double freq = double(correct) / trials;
    const double sigma = std::sqrt(exact * (1 - exact) / trials);
    const double secs = seconds_since(t0);
    const bool ok = std::fabs(p3 - 0.648) <= 1e-12 && std::fabs(freq - exact) <= 3 * sigma && secs < 10.0;
    return verdict(ok, fmt("P(3,0.6)=%.15f P(101,0.6)=%.6f simulated=%.4f (3sigma=%.4f) time=%.2fs", p3, exact,
                           freq, 3 * sigma, secs));
}

// 3. Backward pass against central differences.
Outcome c3() {
    const auto t0 = Clock::now();
    Rng rng = make_rng(31337, 3);
    const auto r = gradcheck::run(rng, 100);
    const double secs = seconds_since(t0);
    return verdict(r.probes == 100 && r.max_rel_error < 1e-4 && secs < 30.0,
                   fmt("probes=%d max_rel_err=%.3g time=%.2fs", r.probes, r.max_rel_error, secs));
}

// 4. Reward telescoping and zero-cost execution.
Outcome c4() {
    const auto t0 = Clock::now();
    Rng rng = make_rng(4, 4);
    double worst_sum = 0.0, worst_exec = 0.0;
    for (int ep = 0; ep < 1000; ++ep) {
        const std::size_t K = 1 + uniform_index(rng, 5);
        const std::size_t T = 10 + uniform_index(rng, 50);
        const auto f = data::synth_series(data::SynthKind::gbm, T, K, static_cast<std::uint64_t>(ep));
        env::EnvConfig c;
        c.initial_cash = uniform(rng, 1e4, 1e6);
        const bool free = ep % 2 == 0;
        c.cost_bps = free ? 0.0 : uniform(rng, 0, 30);
        c.slippage_bps = free ? 0.0 : uniform(rng, 0, 20);
        c.max_trade = 1 + static_cast<int>(uniform_index(rng, 500));
        auto s = env::reset(f, c, 1, static_cast<std::uint64_t>(ep));
        long double total = 0.0L;
        for (std::size_t t = 0; t + 1 < T; ++t) {
            Matrix a(1, static_cast<Eigen::Index>(K));
            for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = uniform(rng, -1.1, 1.1);
            const double before = s.wealth(0);
            const Matrix p0 = s.prices;
            const auto out = env::step(s, a, f, c);
            total += out.rewards[0];
            if (free) {
                long double at_exec = s.cash[0];
                for (std::size_t k = 0; k < K; ++k) {
                    at_exec += static_cast<long double>(s.holdings(0, static_cast<Eigen::Index>(k))) *
                               p0(0, static_cast<Eigen::Index>(k));
                }
                worst_exec = std::max(worst_exec, static_cast<double>(std::fabs(at_exec - before)));
            }
        }
        worst_sum = std::max(worst_sum, static_cast<double>(std::fabs(total - (s.wealth(0) - c.initial_cash))));
    }
    const double secs = seconds_since(t0);
    return verdict(worst_sum <= 1e-9 && worst_exec <= 1e-9 && secs < 30.0,
                   fmt("max|sum r - dW|=%.3g max|exec dW|=%.3g time=%.2fs", worst_sum, worst_exec, secs));
}

// 5. Batched stepping matches single-env runs bit for bit.
Outcome c5() {
    const auto f = data::compute_indicators(data::synth_series(data::SynthKind::gbm, 120, 4, 55), {});
    env::EnvConfig c;
    c.cost_bps = 10;
    c.slippage_bps = 5;
    const std::size_t N = 64;
    auto agent = agents::make_agent(agents::AgentConfig::stock_defaults(agents::AgentKind::ppo), f, c, 5);
    auto batch = env::reset(f, c, N, 2024);
    std::vector<env::BatchState> single;
    for (std::size_t i = 0; i < N; ++i) single.push_back(batch.env(i));
    std::size_t mismatches = 0;
    for (std::size_t t = 0; t + 1 < f.num_steps(); ++t) {
        const auto d = agent->explore(agent->encode(batch), batch.rngs);
        const auto out = env::step(batch, d.env_actions, f, c);
        for (std::size_t i = 0; i < N; ++i) {
            const auto di = agent->explore(agent->encode(single[i]), single[i].rngs);
            const auto oi = env::step(single[i], di.env_actions, f, c);
            mismatches += oi.rewards[0] != out.rewards[i];
        }
    }
    for (std::size_t i = 0; i < N; ++i) mismatches += !(single[i] == batch.env(i));
    return verdict(mismatches == 0, fmt("N=%zu steps=%zu mismatches=%zu", N, f.num_steps() - 1, mismatches));
}

// 6. Throughput scaling on the crypto task.
Outcome c6() {
    const unsigned cores = std::thread::hardware_concurrency();
    const auto t0 = Clock::now();
    cli::BenchOptions o;
    o.section.task = "crypto";
    o.section.env_counts = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    o.section.repeats = 3;
    o.workers = 0;
    std::ostringstream log;
    const auto rows = cli::cmd_bench(o, log);
    const double secs = seconds_since(t0);
    bool monotone = true;
    std::string curve;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].samples_per_sec < rows[i - 1].samples_per_sec) monotone = false;
        curve += fmt("%s%zu:%.0f", i ? " " : "", rows[i].n_envs, rows[i].samples_per_sec);
    }
    const double ratio = rows.back().samples_per_sec / rows.front().samples_per_sec;
    const std::string detail =
        fmt("cores=%u ratio(256/1)=%.2f monotone=%s time=%.1fs [%s]", cores, ratio, monotone ? "yes" : "no", secs,
            curve.c_str());
    if (cores < 4) {
        return {Status::skip, detail + " needs >= 4 cores"};
    }
    return verdict(ratio >= 10.0 && monotone && secs < 300.0, detail);
}

// 7. DQN learns the sawtooth out of sample.
Outcome c7() {
    const auto t0 = Clock::now();
    const auto full = sawtooth(300);
    const auto train = std::make_shared<const data::MarketFrame>(full.slice(0, 200));
    const auto test = full.slice(199, 300);
    env::EnvConfig ec;
    ec.mode = env::ActionMode::discrete;
    ec.lot_size = 8000;
    ec.cost_bps = 10;
    auto ac = agents::AgentConfig::stock_defaults(agents::AgentKind::dqn);
    ac.gamma = 0.9;
    ac.lr = 1e-3;
    ac.epsilon = 0.1;
    ac.updates_per_epoch = 32;
    const agents::TrainSchedule sched{200, 32, 8};
    int positive = 0;
    std::string rets;
    for (int seed = 0; seed < 10; ++seed) {
        std::shared_ptr<agents::Agent> agent = agents::make_agent(ac, *train, ec, static_cast<std::uint64_t>(seed));
        agents::Agent* raw[] = {agent.get()};
        std::shared_ptr<const data::MarketFrame> frames[] = {train};
        agents::train_lockstep(raw, frames, sched);
        const backtest::AgentPolicy pol(agent);
        const double r = cum_return(backtest::run_policy(pol, test, ec).curve);
        positive += r > 0;
        rets += fmt("%s%.4f", seed ? " " : "", r);
    }
    const double secs = seconds_since(t0);
    return verdict(positive >= 8 && secs < 600.0,
                   fmt("positive=%d/10 time=%.1fs [%s]", positive, secs, rets.c_str()));
}

bool vote_properties_exhaustive() {
    const std::vector<int> values{-1, 0, 1};
    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<std::size_t> same(3, a);
        if (ensemble::majority_vote(same, values) != a) return false;
        for (std::size_t b = 0; b < 3; ++b) {
            for (std::size_t c = 0; c < 3; ++c) {
                std::vector<std::size_t> v{a, b, c};
                const std::size_t w = ensemble::majority_vote(v, values);
                std::sort(v.begin(), v.end());
                do {
                    if (ensemble::majority_vote(v, values) != w) return false;
                } while (std::next_permutation(v.begin(), v.end()));
            }
        }
    }
    return true;
}

// 8. Weighted ensemble spread against its members, plus vote properties.
Outcome c8() {
    const auto t0 = Clock::now();
    const auto full = sawtooth(300);
    const auto train = std::make_shared<const data::MarketFrame>(full.slice(0, 200));
    const auto val = full.slice(199, 240);
    const auto test = full.slice(239, 300);
    env::EnvConfig ec;
    ec.max_trade = 2000;
    ec.cost_bps = 10;
    const agents::TrainSchedule sched{30, 32, 4};
    const agents::AgentKind kinds[] = {agents::AgentKind::ppo, agents::AgentKind::sac, agents::AgentKind::ddpg};
    std::vector<std::vector<double>> comp(3);
    std::vector<double> ens;
    for (int seed = 0; seed < 10; ++seed) {
        ensemble::EnsembleSpec spec;
        for (int k = 0; k < 3; ++k) {
            auto ac = agents::AgentConfig::stock_defaults(kinds[k]);
            ac.gamma = 0.9;
            ac.lr = 1e-3;
            ac.updates_per_epoch = 16;
            std::shared_ptr<agents::Agent> a =
                agents::make_agent(ac, *train, ec, static_cast<std::uint64_t>(seed * 10 + k));
            agents::Agent* raw[] = {a.get()};
            std::shared_ptr<const data::MarketFrame> frames[] = {train};
            agents::train_lockstep(raw, frames, sched);
            const backtest::AgentPolicy pol(a);
            comp[k].push_back(cum_return(backtest::run_policy(pol, test, ec).curve));
            spec.members.push_back(a);
        }
        const auto w = ensemble::validate_and_weight(spec, val, ec);
        const ensemble::EnsemblePolicy pol(spec, w);
        ens.push_back(cum_return(backtest::run_policy(pol, test, ec).curve));
    }
    const double s_ppo = sample_std(comp[0]), s_sac = sample_std(comp[1]), s_ddpg = sample_std(comp[2]);
    const double s_ens = sample_std(ens);
    const double s_max = std::max({s_ppo, s_sac, s_ddpg});
    const bool votes = vote_properties_exhaustive();
    const double secs = seconds_since(t0);
    return verdict(s_ens <= s_max && votes,
                   fmt("std ens=%.4f ppo=%.4f sac=%.4f ddpg=%.4f vote_props=%s time=%.1fs", s_ens, s_ppo, s_sac,
                       s_ddpg, votes ? "ok" : "broken", secs));
}

// 9. The diversity term spreads policies apart.
Outcome c9() {
    const auto t0 = Clock::now();
    data::SynthParams p;
    p.amplitude = 10;
    p.period = 20;
    const auto train = std::make_shared<const data::MarketFrame>(data::synth_series(data::SynthKind::sine, 200, 1, 0, p));
    env::EnvConfig ec;
    ec.cost_bps = 10;
    auto ac = agents::AgentConfig::stock_defaults(agents::AgentKind::ppo);
    ac.gamma = 0.9;
    ac.lr = 1e-3;
    ac.updates_per_epoch = 16;
    const agents::TrainSchedule sched{50, 32, 4};
    int wins = 0;
    std::string pairs;
    for (int pair = 0; pair < 5; ++pair) {
        double kl[2];
        for (int v = 0; v < 2; ++v) {
            ac.diversity_lambda = v ? 0.1 : 0.0;
            auto a = agents::make_agent(ac, *train, ec, static_cast<std::uint64_t>(2 * pair));
            auto b = agents::make_agent(ac, *train, ec, static_cast<std::uint64_t>(2 * pair + 1));
            agents::Agent* raw[] = {a.get(), b.get()};
            std::shared_ptr<const data::MarketFrame> frames[] = {train, train};
            agents::train_lockstep(raw, frames, sched);
            env::VecEnv e(train, ec, 4, 99);
            const auto buf = agents::collect_rollouts(*a, e, 64, true);
            const agents::Agent* both[] = {a.get(), b.get()};
            kl[v] = agents::mean_pairwise_kl(both, buf.states);
        }
        wins += kl[1] >= kl[0];
        pairs += fmt("%s%.4f/%.4f", pair ? " " : "", kl[0], kl[1]);
    }
    const double secs = seconds_since(t0);
    return verdict(wins >= 4 && secs < 600.0,
                   fmt("wins=%d/5 time=%.1fs kl(l=0)/kl(l=0.1) [%s]", wins, secs, pairs.c_str()));
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 10. Two identical backtests write identical metrics.
Outcome c10() {
    const fs::path root = fs::temp_directory_path() / "vecfin_acceptance_c10";
    fs::remove_all(root);
    fs::create_directories(root);
    nlohmann::json doc{
        {"task", "stock"},
        {"master_seed", 42},
        {"workers", 1},
        {"data", {{"synth", {{"kind", "gbm"}, {"steps", 140}, {"assets", 3}, {"seed", 9}}}, {"indicators", "default"}}},
        {"env", {{"cost_bps", 10}}},
        {"agents", nlohmann::json::array({{{"kind", "ppo"}, {"hidden", {16}}, {"ppo_epochs", 2}},
                                          {{"kind", "sac"}, {"hidden", {16}}, {"updates_per_epoch", 4}},
                                          {{"kind", "ddpg"}, {"hidden", {16}}, {"updates_per_epoch", 4}}})},
        {"train", {{"epochs", 2}, {"rollout_steps", 16}, {"num_envs", 4}}},
        {"ensemble", {{"presets", {"ensemble-1"}}}},
        {"backtest", {{"train", 40}, {"val", 10}, {"test", 10}}}};
    std::vector<std::string> dumps;
    std::size_t files = 0;
    for (const char* run : {"a", "b"}) {
        doc["output_dir"] = (root / run).string();
        auto cfg = cli::parse_config(doc, root);
        std::ostringstream log;
        cli::cmd_backtest(cfg, log);
        std::vector<fs::path> paths;
        for (const auto& e : fs::directory_iterator(root / run / "metrics")) paths.push_back(e.path());
        std::sort(paths.begin(), paths.end());
        std::string all;
        for (const auto& p : paths) all += p.filename().string() + "\n" + read_file(p);
        files = paths.size();
        dumps.push_back(all);
    }
    fs::remove_all(root);
    return verdict(files > 0 && dumps[0] == dumps[1],
                   fmt("metrics files=%zu identical=%s", files, dumps[0] == dumps[1] ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vecfin acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> checks{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
    bool any_fail = false, any_skip = false;
    for (int i = 1; i <= 10; ++i) {
        if (only != 0 && i != only) continue;
        Outcome o;
        try {
            o = checks[static_cast<std::size_t>(i - 1)]();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        // A criterion whose precondition is unmet is reported as FAIL here;
        // the exit code lets ctest mark it skipped.
        const bool pass = o.status == Status::pass;
        std::printf("criterion %d: %s  %s\n", i, pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        any_fail |= o.status == Status::fail;
        any_skip |= o.status == Status::skip;
    }
    if (any_fail) return 1;
    return any_skip ? 77 : 0;
}
