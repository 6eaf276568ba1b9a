#include <CLI11.hpp>

#include <ostream>

#include "vecfin/cli/commands.hpp"
#include "vecfin/common/error.hpp"

namespace vecfin::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) {
            out.push_back(item);
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

std::vector<std::size_t> parse_counts(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(s)) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) {
            fail(ErrorCode::ConfigError, "env counts must be positive integers, got '" + item + "'");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) {
        fail(ErrorCode::ConfigError, "no env counts given");
    }
    return out;
}

struct RunFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string output_dir;
    std::optional<std::uint64_t> master_seed;
    std::optional<std::size_t> workers;

    void attach(CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config, "JSON run config");
        if (config_required) {
            opt->required();
        }
        cmd->add_option("--set", sets, "Override a config key, e.g. train.epochs=10")->take_all();
        cmd->add_option("--output-dir", output_dir, "Output directory (overrides the config)");
        cmd->add_option("--master-seed", master_seed, "Master seed (overrides the config)");
        cmd->add_option("--workers", workers, "Worker threads, 0 = all cores");
    }

    RunConfig load() const {
        std::vector<std::string> overrides = sets;
        if (master_seed) {
            overrides.push_back("master_seed=" + std::to_string(*master_seed));
        }
        if (workers) {
            overrides.push_back("workers=" + std::to_string(*workers));
        }
        if (!output_dir.empty()) {
            overrides.push_back("output_dir=" + nlohmann::json(fs::absolute(output_dir).string()).dump());
        }
        if (config.empty()) {
            nlohmann::json doc = nlohmann::json::object();
            for (const auto& o : overrides) {
                apply_override(doc, o);
            }
            return parse_config(doc, fs::current_path());
        }
        return load_config(config, overrides);
    }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"vecfin: vectorized trading environments, agents, ensembles and backtests"};
    app.require_subcommand(1);

    IngestOptions ingest;
    std::string ingest_assets;
    std::string ingest_indicators;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a CSV and write a binary frame file");
    c_ingest->add_option("--input", ingest.input, "CSV file")->required();
    c_ingest->add_option("--format", ingest.format, "ohlcv or lob")->check(CLI::IsMember({"ohlcv", "lob"}));
    c_ingest->add_option("--out", ingest.out, "Frame file to write")->required();
    c_ingest->add_option("--assets", ingest_assets, "Comma-separated assets that must be present");
    c_ingest->add_option("--indicators", ingest_indicators, "default, none, or a JSON indicator spec");

    SynthOptions synth;
    std::string synth_kind = "sine";
    std::string synth_csv;
    auto* c_synth = app.add_subcommand("synth", "Write a deterministic synthetic frame");
    c_synth->add_option("--kind", synth_kind, "gbm, sine or sawtooth")
        ->check(CLI::IsMember({"gbm", "sine", "sawtooth"}));
    c_synth->add_option("--steps", synth.source.steps, "Rows");
    c_synth->add_option("--assets", synth.source.assets, "Asset count");
    c_synth->add_option("--seed", synth.source.seed, "Seed");
    c_synth->add_option("--base-price", synth.source.params.base_price);
    c_synth->add_option("--drift", synth.source.params.drift, "gbm log drift per step");
    c_synth->add_option("--volatility", synth.source.params.volatility, "gbm log volatility per step");
    c_synth->add_option("--amplitude", synth.source.params.amplitude);
    c_synth->add_option("--period", synth.source.params.period);
    c_synth->add_flag("--random-phase", synth.source.params.random_phase);
    c_synth->add_option("--out", synth.out, "Frame file to write")->required();
    c_synth->add_option("--csv", synth_csv, "Also write OHLCV CSV here");

    RunFlags train_flags;
    auto* c_train = app.add_subcommand("train", "Train the configured agents and write checkpoints");
    train_flags.attach(c_train, true);

    RunFlags backtest_flags;
    auto* c_backtest = app.add_subcommand("backtest", "Rolling-window backtest of members, ensembles, baselines");
    backtest_flags.attach(c_backtest, true);

    RunFlags bench_flags;
    std::string bench_counts;
    std::optional<std::size_t> bench_steps, bench_repeats, bench_frame_steps;
    std::optional<std::string> bench_task;
    std::string bench_out;
    auto* c_bench = app.add_subcommand("bench", "Sampling throughput against env count");
    bench_flags.attach(c_bench, false);
    c_bench->add_option("--env-counts", bench_counts, "Comma-separated env counts, e.g. 1,2,4,8");
    c_bench->add_option("--steps", bench_steps, "Steps per run");
    c_bench->add_option("--task", bench_task, "stock or crypto")->check(CLI::IsMember({"stock", "crypto"}));
    c_bench->add_option("--repeats", bench_repeats, "Repetitions per count; the median is reported");
    c_bench->add_option("--frame-steps", bench_frame_steps, "Rows in the synthetic bench frame");
    c_bench->add_option("--out", bench_out, "CSV path (default <output_dir>/bench.csv)");

    std::string run_dir;
    auto* c_report = app.add_subcommand("report", "Summarize a backtest run directory");
    c_report->add_option("--run-dir", run_dir, "Directory written by backtest")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_ingest->parsed()) {
            if (!ingest_assets.empty()) {
                ingest.assets = split_list(ingest_assets);
            }
            if (!ingest_indicators.empty()) {
                if (ingest_indicators == "default") {
                    ingest.indicators = data::IndicatorSpec{};
                } else if (ingest_indicators == "none") {
                    ingest.indicators = data::IndicatorSpec::none();
                } else {
                    ingest.indicators = nlohmann::json::parse(ingest_indicators).get<data::IndicatorSpec>();
                }
            }
            cmd_ingest(ingest, out);
        } else if (c_synth->parsed()) {
            synth.source.kind = data::parse_synth_kind(synth_kind);
            if (!synth_csv.empty()) {
                synth.csv = synth_csv;
            }
            cmd_synth(synth, out);
        } else if (c_train->parsed()) {
            cmd_train(train_flags.load(), out);
        } else if (c_backtest->parsed()) {
            cmd_backtest(backtest_flags.load(), out);
        } else if (c_bench->parsed()) {
            const RunConfig rc = bench_flags.load();
            BenchOptions opts;
            opts.section = rc.bench;
            opts.seed = rc.master_seed;
            opts.workers = rc.workers;
            if (!bench_counts.empty()) {
                opts.section.env_counts = parse_counts(bench_counts);
            }
            if (bench_steps) {
                opts.section.steps = *bench_steps;
            }
            if (bench_repeats) {
                opts.section.repeats = *bench_repeats;
            }
            if (bench_frame_steps) {
                opts.section.frame_steps = *bench_frame_steps;
            }
            if (bench_task) {
                opts.section.task = *bench_task;
            }
            opts.out = bench_out.empty() ? rc.output_dir / "bench.csv" : fs::path(bench_out);
            const auto rows = cmd_bench(opts, out);
            out << bench_csv(rows);
        } else if (c_report->parsed()) {
            cmd_report(run_dir, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace vecfin::cli
