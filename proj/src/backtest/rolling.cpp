#include "vecfin/backtest/rolling.hpp"

#include "vecfin/backtest/simulate.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/data/augment.hpp"

namespace vecfin::backtest {

namespace {

void check_window(const data::Window& w) {
    if (w.train.size() < 2 || w.val.size() < 1 || w.test.size() < 1 || w.val.begin < 1 ||
        w.test.begin < 1) {
        fail(ErrorCode::WindowTooShort, "window needs >= 2 train rows, >= 1 val and test row, "
                                        "and a row before each of val and test");
    }
}

/// Appends `part` to `whole`, dropping the duplicate opening mark after the first window.
void splice(EquityCurve& whole, const EquityCurve& part) {
    const std::size_t from = whole.size() == 0 ? 0 : 1;
    for (std::size_t t = from; t < part.size(); ++t) {
        whole.append(part.timestamps[t], part.wealth[t]);
    }
}

void splice(TradeLog& whole, const TradeLog& part) {
    for (const auto& f : part.fills()) {
        whole.record(f);
    }
}

}  // namespace

std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t member, std::size_t window) {
    return derive_seed(derive_seed(master_seed, member), window);
}

std::vector<StrategyResult> run_rolling(const data::MarketFrame& frame,
                                        const data::WindowSchedule& schedule,
                                        const RollingConfig& config, ThreadPool* pool) {
    data::validate_schedule(schedule, frame.num_steps());
    if (schedule.windows.empty()) {
        fail(ErrorCode::WindowTooShort, "schedule has no windows");
    }
    for (const auto& w : schedule.windows) {
        check_window(w);
    }
    const bool pretrained = !config.pretrained.empty();
    const std::size_t M = pretrained ? config.pretrained.size() : config.members.size();
    if (M == 0 && !config.baselines) {
        fail(ErrorCode::ConfigError, "nothing to backtest: no members and no baselines");
    }
    if (pretrained && config.report_members && config.members.size() != M &&
        !config.members.empty()) {
        fail(ErrorCode::ConfigError, "member names must match the pretrained agents");
    }
    for (const auto& e : config.ensembles) {
        if (e.members.empty()) {
            fail(ErrorCode::ConfigError, "ensemble '" + e.name + "' has no members");
        }
        for (auto i : e.members) {
            if (i >= M) {
                fail(ErrorCode::ConfigError, "ensemble '" + e.name + "' references a missing member");
            }
        }
    }
    auto member_name = [&](std::size_t m) {
        return m < config.members.size() ? config.members[m].name : "member_" + std::to_string(m);
    };

    std::vector<StrategyResult> members(config.report_members ? M : 0);
    std::vector<StrategyResult> ensembles(config.ensembles.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
        members[m].name = member_name(m);
    }
    for (std::size_t e = 0; e < ensembles.size(); ++e) {
        ensembles[e].name = config.ensembles[e].name;
    }

    std::vector<double> member_wealth(members.size(), config.env.initial_cash);
    std::vector<double> ensemble_wealth(ensembles.size(), config.env.initial_cash);

    for (std::size_t w = 0; w < schedule.windows.size(); ++w) {
        const data::Window& win = schedule.windows[w];
        std::vector<std::shared_ptr<const agents::Agent>> trained;
        if (pretrained) {
            trained = config.pretrained;
        } else if (M > 0) {
            std::vector<std::shared_ptr<agents::Agent>> agents_w;
            std::vector<std::shared_ptr<const data::MarketFrame>> frames;
            const data::MarketFrame prefix = frame.slice(0, win.train.end);
            for (std::size_t m = 0; m < M; ++m) {
                const auto& spec = config.members[m];
                const std::uint64_t seed = member_seed(config.master_seed, spec.seed, w);
                data::MarketFrame train =
                    config.augment_magnitude > 0.0
                        ? data::perturb_prices(prefix, derive_seed(seed, 0xA116),
                                               config.augment_magnitude)
                              .slice(win.train.begin, win.train.end)
                        : prefix.slice(win.train.begin, win.train.end);
                auto frame_ptr = std::make_shared<const data::MarketFrame>(std::move(train));
                auto agent = agents::make_agent(spec.config, *frame_ptr, config.env, seed);
                agent->meta().window = static_cast<std::int64_t>(w);
                agents_w.push_back(std::move(agent));
                frames.push_back(std::move(frame_ptr));
            }
            std::vector<agents::Agent*> raw;
            for (auto& a : agents_w) {
                raw.push_back(a.get());
            }
            const auto log = agents::train_lockstep(raw, frames, config.schedule, pool);
            if (config.on_trained) {
                config.on_trained(w, agents_w, log);
            }
            trained.assign(agents_w.begin(), agents_w.end());
        }

        const data::MarketFrame val = frame.slice(win.val.begin - 1, win.val.end);
        const data::MarketFrame test = frame.slice(win.test.begin - 1, win.test.end);

        for (std::size_t m = 0; m < members.size(); ++m) {
            env::EnvConfig cfg = config.env;
            cfg.initial_cash = member_wealth[m];
            const AgentPolicy policy(trained[m]);
            const PolicyRun run = run_policy(policy, test, cfg);
            splice(members[m].curve, run.curve);
            splice(members[m].trades, run.trades);
            member_wealth[m] = run.curve.wealth.back();
        }

        for (std::size_t e = 0; e < ensembles.size(); ++e) {
            const auto& variant = config.ensembles[e];
            ensemble::EnsembleSpec spec;
            for (auto i : variant.members) {
                spec.members.push_back(trained[i]);
            }
            spec.rule = variant.rule;
            spec.discard_threshold = variant.discard_threshold;
            spec.temperature = variant.temperature;
            const ensemble::AgentWeights weights =
                variant.rule == ensemble::Rule::weighted_average
                    ? ensemble::validate_and_weight(spec, val, config.env, config.periods_per_year)
                    : ensemble::uniform_weights(spec.members.size());
            env::EnvConfig cfg = config.env;
            cfg.initial_cash = ensemble_wealth[e];
            const ensemble::EnsemblePolicy policy(spec, weights);
            const PolicyRun run = run_policy(policy, test, cfg);
            splice(ensembles[e].curve, run.curve);
            splice(ensembles[e].trades, run.trades);
            ensembles[e].window_weights.push_back(weights);
            ensemble_wealth[e] = run.curve.wealth.back();
        }
    }

    std::vector<StrategyResult> out;
    for (auto& r : members) {
        out.push_back(std::move(r));
    }
    for (auto& r : ensembles) {
        out.push_back(std::move(r));
    }
    if (config.baselines) {
        const data::MarketFrame span =
            frame.slice(schedule.windows.front().test.begin - 1, schedule.windows.back().test.end);
        StrategyResult bh;
        bh.name = "buy_and_hold";
        bh.curve = buy_and_hold_baseline(span, config.env);
        out.push_back(std::move(bh));
        StrategyResult hold;
        hold.name = "hold";
        const HoldPolicy policy(config.env);
        hold.curve = run_policy(policy, span, config.env).curve;
        out.push_back(std::move(hold));
    }
    for (auto& r : out) {
        r.metrics = compute_metrics(r.curve, r.trades, config.rf, config.periods_per_year);
    }
    return out;
}

}  // namespace vecfin::backtest
