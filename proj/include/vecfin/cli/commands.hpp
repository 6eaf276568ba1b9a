#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vecfin/cli/config.hpp"

namespace vecfin::cli {

struct IngestOptions {
    std::filesystem::path input;
    std::string format = "ohlcv";
    std::filesystem::path out;
    std::optional<std::vector<std::string>> assets;
    std::optional<data::IndicatorSpec> indicators;
};

/// Writes the frame file and `<out>.summary.txt`; returns the summary.
std::string cmd_ingest(const IngestOptions& options, std::ostream& log);

struct SynthOptions {
    SynthSource source;
    std::filesystem::path out;
    /// Also write the series as OHLCV CSV.
    std::optional<std::filesystem::path> csv;
};

std::string cmd_synth(const SynthOptions& options, std::ostream& log);

/// Writes checkpoints/<agent>.vfa and train_log.csv under the output dir.
void cmd_train(const RunConfig& config, std::ostream& log);

/// Writes metrics/, equity/, trades/ and manifest.json under the output dir.
void cmd_backtest(const RunConfig& config, std::ostream& log);

struct BenchRow {
    std::size_t n_envs = 0;
    std::size_t samples = 0;
    double samples_per_sec = 0.0;
};

struct BenchOptions {
    BenchSection section;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::optional<std::filesystem::path> out;
};

/// Median of the repetitions per env count; CSV `n_envs,samples_per_sec`.
std::vector<BenchRow> cmd_bench(const BenchOptions& options, std::ostream& log);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Reads a backtest run directory and writes summary.txt, summary.csv and
/// charts/<strategy>.svg into it.
void cmd_report(const std::filesystem::path& run_dir, std::ostream& log);

/// Parses argv, dispatches, and maps failures to exit codes
/// (0 ok, 1 config, 2 data, 3 numeric).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vecfin::cli
