#include <algorithm>
#include <chrono>
#include <ostream>

#include "util.hpp"
#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/cli/commands.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/common/thread_pool.hpp"

namespace vecfin::cli {

namespace {

struct BenchTask {
    std::shared_ptr<const data::MarketFrame> frame;
    env::EnvConfig env;
    std::unique_ptr<agents::Agent> agent;
};

/// crypto: one asset, discrete lots, DQN 128x3. stock: 30 assets,
/// continuous, PPO 64x32. Both run untrained networks.
BenchTask make_task(const BenchSection& s, std::uint64_t seed) {
    BenchTask t;
    const bool crypto = s.task == "crypto";
    data::SynthParams params;
    params.volatility = 0.01;
    auto raw = data::synth_series(data::SynthKind::gbm, s.frame_steps, crypto ? 1 : 30,
                                  derive_seed(seed, 0xB3E7), params);
    t.frame = std::make_shared<const data::MarketFrame>(data::compute_indicators(raw, data::IndicatorSpec{}));
    if (crypto) {
        t.env.mode = env::ActionMode::discrete;
        t.env.lot_size = 1.0;
        t.env.cost_bps = 10.0;
        t.agent = agents::make_agent(agents::AgentConfig::crypto_defaults(agents::AgentKind::dqn), *t.frame,
                                     t.env, seed);
    } else {
        t.env.cost_bps = 10.0;
        t.agent = agents::make_agent(agents::AgentConfig::stock_defaults(agents::AgentKind::ppo), *t.frame,
                                     t.env, seed);
    }
    return t;
}

BenchRow run_once(const BenchTask& t, std::size_t n, std::size_t steps, std::uint64_t seed, ThreadPool* pool) {
    env::VecEnv venv(t.frame, t.env, n, seed, pool);
    BenchRow row;
    row.n_envs = n;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < steps; ++s) {
        const Matrix enc = t.agent->encode(venv.state());
        const agents::Decision d = t.agent->explore(enc, venv.state().rngs);
        const auto& out = venv.step(d.env_actions);
        row.samples += out.rewards.size();
        if (std::any_of(out.done.begin(), out.done.end(), [](std::uint8_t f) { return f != 0; })) {
            venv.reset_done();
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.samples_per_sec = static_cast<double>(row.samples) / std::max(secs, 1e-12);
    return row;
}

}  // namespace

std::vector<BenchRow> cmd_bench(const BenchOptions& options, std::ostream& log) {
    const BenchSection& s = options.section;
    if (s.env_counts.empty() || s.steps < 1 || s.repeats < 1) {
        fail(ErrorCode::ConfigError, "bench needs env counts, steps >= 1 and repeats >= 1");
    }
    for (auto n : s.env_counts) {
        if (n < 1) {
            fail(ErrorCode::ConfigError, "env counts must be >= 1");
        }
    }
    const BenchTask task = make_task(s, options.seed);
    ThreadPool pool(options.workers);
    log << "bench " << s.task << ": " << s.steps << " steps, " << s.repeats << " repeats, " << pool.size()
        << " worker(s)\n";
    std::vector<BenchRow> rows;
    for (auto n : s.env_counts) {
        std::vector<BenchRow> reps;
        for (std::size_t r = 0; r < s.repeats; ++r) {
            reps.push_back(run_once(task, n, s.steps, derive_seed(options.seed, r), &pool));
        }
        std::sort(reps.begin(), reps.end(),
                  [](const BenchRow& a, const BenchRow& b) { return a.samples_per_sec < b.samples_per_sec; });
        rows.push_back(reps[reps.size() / 2]);
        log << "  n_envs " << n << ": " << static_cast<long long>(rows.back().samples_per_sec)
            << " samples/sec\n";
    }
    if (options.out) {
        write_text(*options.out, bench_csv(rows));
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string csv = "n_envs,samples_per_sec\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.n_envs) + "," + backtest::format_double(r.samples_per_sec) + "\n";
    }
    return csv;
}

}  // namespace vecfin::cli
