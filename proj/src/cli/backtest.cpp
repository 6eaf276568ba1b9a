#include <cctype>
#include <cmath>
#include <map>
#include <ostream>

#include "util.hpp"
#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/backtest/rolling.hpp"
#include "vecfin/cli/commands.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/windows.hpp"

namespace vecfin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Slot {
    std::string name;
    agents::AgentKind kind;
};

void check_name(const std::string& name) {
    if (name.empty()) {
        fail(ErrorCode::ConfigError, "empty strategy name");
    }
    for (char ch : name) {
        const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
        if (!ok) {
            fail(ErrorCode::ConfigError, "strategy name '" + name + "' may only use [A-Za-z0-9_.-]");
        }
    }
}

std::vector<backtest::MemberSpec> members_for_presets(const RunConfig& config) {
    std::map<agents::AgentKind, std::size_t> need;
    std::vector<agents::AgentKind> order;
    for (const auto& name : config.ensemble.presets) {
        const auto p = ensemble::preset(name, config.task);
        for (auto k : p.kinds) {
            if (!need.count(k)) {
                order.push_back(k);
            }
            need[k] = std::max(need[k], p.per_kind);
        }
    }
    std::vector<backtest::MemberSpec> out;
    for (auto k : order) {
        for (std::size_t i = 0; i < need[k]; ++i) {
            backtest::MemberSpec m;
            m.name = agents::to_string(k) + "_" + std::to_string(i);
            m.config = config.task == "crypto" ? agents::AgentConfig::crypto_defaults(k)
                                               : agents::AgentConfig::stock_defaults(k);
            m.seed = out.size();
            out.push_back(std::move(m));
        }
    }
    return out;
}

json weights_json(const std::vector<ensemble::AgentWeights>& ws) {
    json arr = json::array();
    for (const auto& w : ws) {
        json sharpes = json::array();
        for (double s : w.sharpes) {
            sharpes.push_back(std::isfinite(s) ? json(s) : json(nullptr));
        }
        arr.push_back({{"weights", w.weights}, {"retained", w.retained}, {"sharpes", sharpes}});
    }
    return arr;
}

json range_json(const data::Range& r) { return json::array({r.begin, r.end}); }

}  // namespace

void cmd_backtest(const RunConfig& config, std::ostream& log) {
    const data::MarketFrame frame = load_data(config.data);
    const auto& bt = config.backtest;

    backtest::RollingConfig rc;
    rc.env = config.env;
    rc.schedule = config.train;
    rc.master_seed = config.master_seed;
    rc.augment_magnitude = bt.augment_magnitude;
    rc.rf = bt.rf;
    rc.periods_per_year = bt.periods_per_year;
    rc.report_members = bt.report_members;
    rc.baselines = bt.baselines;

    std::vector<Slot> slots;
    if (!config.ensemble.checkpoints.empty()) {
        for (const auto& path : config.ensemble.checkpoints) {
            std::shared_ptr<const agents::Agent> agent = agents::load_agent(path);
            backtest::MemberSpec m;
            m.name = path.stem().string();
            m.config = agent->config();
            rc.members.push_back(m);
            slots.push_back({m.name, agent->kind()});
            rc.pretrained.push_back(std::move(agent));
        }
    } else {
        for (const auto& a : config.agents) {
            rc.members.push_back({a.name, a.config, a.seed});
        }
        if (rc.members.empty()) {
            rc.members = members_for_presets(config);
        }
        for (const auto& m : rc.members) {
            slots.push_back({m.name, m.config.kind});
        }
    }
    for (const auto& s : slots) {
        check_name(s.name);
    }

    for (const auto& name : config.ensemble.presets) {
        const auto p = ensemble::preset(name, config.task);
        backtest::EnsembleVariant v;
        v.name = p.name;
        v.rule = p.rule;
        v.discard_threshold = config.ensemble.discard_threshold;
        v.temperature = config.ensemble.temperature;
        for (auto k : p.kinds) {
            std::size_t taken = 0;
            for (std::size_t i = 0; i < slots.size() && taken < p.per_kind; ++i) {
                if (slots[i].kind == k) {
                    v.members.push_back(i);
                    ++taken;
                }
            }
            if (taken < p.per_kind) {
                fail(ErrorCode::ConfigError, "preset " + p.name + " needs " + std::to_string(p.per_kind) +
                                                 " " + agents::to_string(k) + " agents, found " +
                                                 std::to_string(taken));
            }
        }
        rc.ensembles.push_back(std::move(v));
    }
    for (const auto& c : config.ensemble.custom) {
        backtest::EnsembleVariant v;
        v.name = c.name;
        v.rule = c.rule;
        v.discard_threshold = c.discard_threshold;
        v.temperature = c.temperature;
        for (const auto& m : c.members) {
            std::size_t i = 0;
            while (i < slots.size() && slots[i].name != m) {
                ++i;
            }
            if (i == slots.size()) {
                fail(ErrorCode::ConfigError, "ensemble " + c.name + " references unknown member " + m);
            }
            v.members.push_back(i);
        }
        rc.ensembles.push_back(std::move(v));
    }
    for (const auto& e : rc.ensembles) {
        check_name(e.name);
    }

    const std::size_t start =
        bt.start ? *bt.start : (config.data.indicators ? config.data.indicators->lookback() : 0);
    if (start >= frame.num_steps()) {
        fail(ErrorCode::InsufficientData, "backtest.start is past the end of the frame");
    }
    const auto schedule =
        data::make_windows(frame.num_steps() - start, bt.train, bt.val, bt.test, bt.test).shifted(start);
    log << "backtest: " << schedule.windows.size() << " window(s), " << slots.size() << " member(s), "
        << rc.ensembles.size() << " ensemble(s)\n";

    ThreadPool pool(config.workers);
    std::vector<backtest::StrategyResult> results;
    try {
        results = backtest::run_rolling(frame, schedule, rc, &pool);
    } catch (const Error& e) {
        if (exit_code_for(e.code()) == 3) {
            write_text(config.output_dir / "diagnostics.json",
                       json{{"error", e.what()}, {"config", config.source}}.dump(2) + "\n");
        }
        throw;
    }

    const fs::path out = config.output_dir;
    json manifest{{"task", config.task},
                  {"master_seed", config.master_seed},
                  {"num_assets", frame.num_assets()},
                  {"strategies", json::array()},
                  {"windows", json::array()}};
    for (const auto& w : schedule.windows) {
        manifest["windows"].push_back(
            {{"train", range_json(w.train)}, {"val", range_json(w.val)}, {"test", range_json(w.test)}});
    }
    for (const auto& r : results) {
        check_name(r.name);
        const std::string metrics = "metrics/" + r.name + ".json";
        const std::string equity = "equity/" + r.name + ".csv";
        const std::string trades = "trades/" + r.name + ".csv";
        ensure_parent(out / metrics);
        ensure_parent(out / equity);
        ensure_parent(out / trades);
        backtest::write_metrics_json(out / metrics, r.name, r.metrics);
        backtest::write_equity_csv(out / equity, r.curve);
        backtest::write_trades_csv(out / trades, r.trades, frame.asset_ids);
        json entry{{"name", r.name}, {"metrics", metrics}, {"equity", equity}, {"trades", trades}};
        if (!r.window_weights.empty()) {
            entry["window_weights"] = weights_json(r.window_weights);
        }
        manifest["strategies"].push_back(std::move(entry));
        log << "  " << r.name << ": cumulative_return " << r.metrics.cumulative_return << ", sharpe "
            << r.metrics.sharpe << "\n";
    }
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
    log << "wrote " << results.size() << " strategies to " << out.string() << "\n";
}

}  // namespace vecfin::cli
