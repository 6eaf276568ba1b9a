#include "vecfin/cli/commands.hpp"

#include <fstream>
#include <ostream>

#include "vecfin/agents/agent.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/common/thread_pool.hpp"
#include "vecfin/data/augment.hpp"
#include "vecfin/data/csv_loader.hpp"
#include "vecfin/data/frame_io.hpp"
#include "util.hpp"

namespace vecfin::cli {

namespace fs = std::filesystem;

namespace {

std::string write_summary(const data::MarketFrame& frame, const fs::path& out, std::ostream& log) {
    const std::string summary = data::frame_summary(frame);
    fs::path summary_path = out;
    summary_path += ".summary.txt";
    write_text(summary_path, summary);
    log << summary;
    return summary;
}

}  // namespace

std::string cmd_ingest(const IngestOptions& options, std::ostream& log) {
    if (options.format != "ohlcv" && options.format != "lob") {
        fail(ErrorCode::ConfigError, "format must be ohlcv or lob, got " + options.format);
    }
    data::MarketFrame frame = options.format == "lob" ? data::load_lob_csv(options.input)
                                                      : data::load_ohlcv_csv(options.input, options.assets);
    if (options.indicators) {
        frame = data::compute_indicators(frame, *options.indicators);
    }
    frame.validate();
    ensure_parent(options.out);
    data::save_frame(options.out, frame);
    return write_summary(frame, options.out, log);
}

std::string cmd_synth(const SynthOptions& options, std::ostream& log) {
    const auto& s = options.source;
    const auto frame = data::synth_series(s.kind, s.steps, s.assets, s.seed, s.params);
    ensure_parent(options.out);
    data::save_frame(options.out, frame);
    if (options.csv) {
        ensure_parent(*options.csv);
        data::write_ohlcv_csv(*options.csv, frame);
    }
    return write_summary(frame, options.out, log);
}

void cmd_train(const RunConfig& config, std::ostream& log) {
    if (config.agents.empty()) {
        fail(ErrorCode::ConfigError, "no agents configured");
    }
    data::MarketFrame frame = load_data(config.data);
    if (config.train_range) {
        const auto [b, e] = *config.train_range;
        if (e > frame.num_steps()) {
            fail(ErrorCode::InsufficientData, "train.range ends past the frame (" +
                                                  std::to_string(frame.num_steps()) + " rows)");
        }
        frame = frame.slice(b, e);
    }
    ThreadPool pool(config.workers);

    std::vector<std::unique_ptr<agents::Agent>> owned;
    std::vector<agents::Agent*> ptrs;
    std::vector<std::shared_ptr<const data::MarketFrame>> frames;
    for (const auto& entry : config.agents) {
        const std::uint64_t seed = derive_seed(config.master_seed, entry.seed);
        data::MarketFrame base = frame;
        if (entry.asset_subset > 0) {
            base = data::select_assets(
                frame, data::sample_asset_subset(frame.num_assets(), entry.asset_subset,
                                                 derive_seed(config.master_seed, entry.subset_seed)));
        }
        auto agent_frame = std::make_shared<const data::MarketFrame>(
            config.train_augment_magnitude > 0.0
                ? data::perturb_prices(base, derive_seed(seed, 0xA116), config.train_augment_magnitude)
                : std::move(base));
        owned.push_back(agents::make_agent(entry.config, *agent_frame, config.env, seed));
        ptrs.push_back(owned.back().get());
        frames.push_back(std::move(agent_frame));
    }

    log << "training " << owned.size() << " agent(s) for " << config.train.epochs << " epochs, "
        << config.train.num_envs << " envs each\n";
    std::vector<agents::EpochLog> logs;
    try {
        logs = agents::train_lockstep(ptrs, frames, config.train, &pool);
    } catch (const Error& e) {
        if (exit_code_for(e.code()) == 3) {
            nlohmann::json diag{{"error", e.what()}, {"config", config.source}};
            for (std::size_t i = 0; i < ptrs.size(); ++i) {
                diag["agents"].push_back({{"name", config.agents[i].name},
                                          {"policy_version", ptrs[i]->policy_version()}});
            }
            write_text(config.output_dir / "diagnostics.json", diag.dump(2) + "\n");
            log << "wrote " << (config.output_dir / "diagnostics.json").string() << "\n";
        }
        throw;
    }

    const fs::path ckpt_dir = config.output_dir / "checkpoints";
    fs::create_directories(ckpt_dir);
    for (std::size_t i = 0; i < owned.size(); ++i) {
        agents::save_agent(ckpt_dir / (config.agents[i].name + ".vfa"), *owned[i]);
    }
    std::string csv = "agent,epoch,loss,diversity,mean_reward,samples_per_sec\n";
    for (const auto& l : logs) {
        csv += config.agents[l.agent].name + "," + std::to_string(l.epoch) + "," +
               backtest::format_double(l.loss) + "," + backtest::format_double(l.diversity) + "," +
               backtest::format_double(l.mean_reward) + "," + backtest::format_double(l.samples_per_sec) +
               "\n";
    }
    write_text(config.output_dir / "train_log.csv", csv);
    if (!logs.empty()) {
        const auto& last = logs.back();
        log << "final epoch " << last.epoch << ": loss " << last.loss << ", "
            << static_cast<long long>(last.samples_per_sec) << " samples/sec\n";
    }
    log << "checkpoints in " << ckpt_dir.string() << "\n";
}

}  // namespace vecfin::cli
