#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecfin/agents/config.hpp"
#include "vecfin/data/indicators.hpp"
#include "vecfin/data/market_frame.hpp"
#include "vecfin/data/synth.hpp"
#include "vecfin/ensemble/ensemble.hpp"
#include "vecfin/env/vec_env.hpp"

namespace vecfin::cli {

struct SynthSource {
    data::SynthKind kind = data::SynthKind::sine;
    std::size_t steps = 256;
    std::size_t assets = 1;
    std::uint64_t seed = 0;
    data::SynthParams params;
};

/// Exactly one of frame, csv or synth is set.
struct DataSection {
    std::optional<std::filesystem::path> frame;
    std::optional<std::filesystem::path> csv;
    /// csv only: "ohlcv" or "lob".
    std::string format = "ohlcv";
    std::optional<std::vector<std::string>> assets;
    std::optional<SynthSource> synth;
    /// Recomputes features after loading when set.
    std::optional<data::IndicatorSpec> indicators;
    /// Keep a seeded random subset of this many assets; 0 keeps all.
    std::size_t asset_subset = 0;
    std::uint64_t subset_seed = 0;
};

struct AgentEntry {
    std::string name;
    agents::AgentConfig config;
    std::uint64_t seed = 0;
    /// train only: this agent sees a seeded random subset of this many
    /// assets; 0 keeps the full universe.
    std::size_t asset_subset = 0;
    std::uint64_t subset_seed = 0;
};

struct CustomEnsemble {
    std::string name;
    ensemble::Rule rule = ensemble::Rule::weighted_average;
    /// Agent names.
    std::vector<std::string> members;
    double discard_threshold = 0.0;
    double temperature = 1.0;
};

struct EnsembleSection {
    std::vector<std::string> presets;
    std::vector<CustomEnsemble> custom;
    double discard_threshold = 0.0;
    double temperature = 1.0;
    /// Pretrained member checkpoints; when set, backtest does not train.
    std::vector<std::filesystem::path> checkpoints;
};

struct BacktestSection {
    std::size_t train = 30;
    std::size_t val = 5;
    std::size_t test = 5;
    /// First row of the first window. Defaults to the indicator lookback.
    std::optional<std::size_t> start;
    double rf = 0.0;
    double periods_per_year = 252.0;
    bool report_members = true;
    bool baselines = true;
    double augment_magnitude = 0.01;
};

struct BenchSection {
    std::vector<std::size_t> env_counts{1, 2, 4, 8, 16, 32, 64, 128, 256};
    std::size_t steps = 256;
    std::size_t repeats = 3;
    std::string task = "crypto";
    std::size_t frame_steps = 2048;
};

struct RunConfig {
    std::string task = "stock";
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir;
    /// 0 means all available cores.
    std::size_t workers = 0;
    DataSection data;
    env::EnvConfig env;
    std::vector<AgentEntry> agents;
    agents::TrainSchedule train;
    /// Train on this row range of the loaded frame; whole frame when unset.
    std::optional<std::pair<std::size_t, std::size_t>> train_range;
    double train_augment_magnitude = 0.0;
    EnsembleSection ensemble;
    BacktestSection backtest;
    BenchSection bench;
    /// The document the config was parsed from, after overrides.
    nlohmann::json source;
};

/// VECFIN_OUTPUT_DIR when set, otherwise "vecfin_out".
std::filesystem::path default_output_dir();

nlohmann::json read_config_json(const std::filesystem::path& path);

/// Applies `dotted.key=value`. The value is parsed as JSON and falls back to
/// a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Relative paths in the document resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Loads, featurizes and subsets the configured frame.
data::MarketFrame load_data(const DataSection& section);

}  // namespace vecfin::cli
