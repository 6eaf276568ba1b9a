#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "support/helpers.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/cli/commands.hpp"
#include "vecfin/cli/config.hpp"

using namespace vecfin;
using namespace vecfin::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("vecfin_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::vector<const char*> argv{"vecfin"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(VECFIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string two_asset_csv(std::size_t T) {
    std::string s = "timestamp,asset,open,high,low,close,volume\n";
    for (std::size_t t = 0; t < T; ++t) {
        const double a = 100 + double(t % 7), b = 50 + double((t * 3) % 11);
        s += std::to_string(t) + ",AAA," + std::to_string(a) + "," + std::to_string(a + 1) + "," +
             std::to_string(a - 1) + "," + std::to_string(a) + ",10\n";
        s += std::to_string(t) + ",BBB," + std::to_string(b) + "," + std::to_string(b + 1) + "," +
             std::to_string(b - 1) + "," + std::to_string(b) + ",10\n";
    }
    return s;
}

json train_config(const fs::path& out) {
    return json{{"master_seed", 5},
                {"output_dir", out.string()},
                {"workers", 1},
                {"data", {{"synth", {{"kind", "sine"}, {"steps", 40}, {"assets", 1}, {"seed", 1}}}}},
                {"env", {{"mode", "discrete"}, {"lot_size", 100}}},
                {"agents", json::array({{{"kind", "dqn"}, {"hidden", {16}}, {"batch_size", 16}, {"updates_per_epoch", 2}}})},
                {"train", {{"epochs", 2}, {"rollout_steps", 8}, {"num_envs", 8}}}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ingest: two assets, summary, byte-identical rerun") {
    TempDir d("ingest");
    write(d.path / "in.csv", two_asset_csv(30));
    const fs::path out = d.path / "f.vff";
    CHECK(run({"ingest", "--input", (d.path / "in.csv").string(), "--out", out.string()}) == 0);
    const std::string summary = slurp(out.string() + ".summary.txt");
    CHECK(summary.find("K=2") != std::string::npos);
    const std::string first = slurp(out);
    CHECK(run({"ingest", "--input", (d.path / "in.csv").string(), "--out", out.string()}) == 0);
    CHECK(slurp(out) == first);
}

TEST_CASE("ingest: high below low exits 2 and cites the line") {
    TempDir d("ingest_bad");
    write(d.path / "bad.csv", "timestamp,asset,open,high,low,close,volume\n1,A,10,11,9,10,0\n2,A,10,8,9,10,0\n");
    std::string err;
    CHECK(run({"ingest", "--input", (d.path / "bad.csv").string(), "--out", (d.path / "x.vff").string()}, &err) == 2);
    CHECK(err.find("3") != std::string::npos);
    CHECK(run_binary("ingest --input " + (d.path / "bad.csv").string() + " --out " + (d.path / "y.vff").string()) == 2);
}

TEST_CASE("train: checkpoint, log, deterministic, bad kind") {
    TempDir d("train");
    for (const char* name : {"a", "b"}) {
        write(d.path / (std::string(name) + ".json"), train_config(d.path / name).dump());
        CHECK(run({"train", "--config", (d.path / (std::string(name) + ".json")).string()}) == 0);
    }
    REQUIRE(fs::exists(d.path / "a" / "checkpoints" / "dqn_0.vfa"));
    REQUIRE(fs::exists(d.path / "a" / "train_log.csv"));
    CHECK(slurp(d.path / "a" / "checkpoints" / "dqn_0.vfa") == slurp(d.path / "b" / "checkpoints" / "dqn_0.vfa"));
    const std::string log = slurp(d.path / "a" / "train_log.csv");
    CHECK(log.rfind("agent,epoch,loss,diversity,mean_reward,samples_per_sec\n", 0) == 0);

    auto bad = train_config(d.path / "c");
    bad["agents"][0]["kind"] = "a2c";
    write(d.path / "c.json", bad.dump());
    CHECK(run({"train", "--config", (d.path / "c.json").string()}) == 1);
    CHECK(run({"train", "--config", (d.path / "nope.json").string()}) != 0);
    CHECK(run({"frobnicate"}) == 1);
}

TEST_CASE("backtest: hold is flat, buy-and-hold doubles, one metrics file per strategy") {
    TempDir d("backtest");
    std::string csv = "timestamp,asset,open,high,low,close,volume\n";
    for (int t = 0; t < 40; ++t) {
        const double p = t <= 35 ? 10.0 : 10.0 + 2.5 * (t - 35);
        const std::string ps = std::to_string(p);
        csv += std::to_string(t) + ",X," + ps + "," + ps + "," + ps + "," + ps + ",0\n";
    }
    write(d.path / "p.csv", csv);
    json cfg{{"master_seed", 1},
             {"output_dir", (d.path / "run").string()},
             {"workers", 1},
             {"data", {{"csv", "p.csv"}}},
             {"env", {{"mode", "discrete"}, {"lot_size", 100}}},
             {"agents", json::array({{{"kind", "dqn"}, {"hidden", {8}}, {"batch_size", 8}, {"updates_per_epoch", 1}}})},
             {"train", {{"epochs", 1}, {"rollout_steps", 4}, {"num_envs", 2}}},
             {"backtest", {{"train", 30}, {"val", 5}, {"test", 5}}}};
    write(d.path / "bt.json", cfg.dump());
    REQUIRE(run({"backtest", "--config", (d.path / "bt.json").string()}) == 0);
    const fs::path runp = d.path / "run";
    const auto hold = backtest::read_metrics_json(runp / "metrics" / "hold.json");
    CHECK(hold.cumulative_return == 0.0);
    // Prices 10 at the opening mark, 20 at the last row.
    const auto bh = backtest::read_metrics_json(runp / "metrics" / "buy_and_hold.json");
    CHECK(bh.cumulative_return == doctest::Approx(1.0).epsilon(1e-12));
    const json manifest = json::parse(slurp(runp / "manifest.json"));
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(runp / "metrics")) n += e.path().extension() == ".json";
    CHECK(manifest.at("strategies").size() == n);
    for (const auto& s : manifest.at("strategies")) {
        CHECK(fs::exists(runp / "metrics" / (s.at("name").get<std::string>() + ".json")));
    }

    REQUIRE(run({"report", "--run-dir", runp.string()}) == 0);
    const std::string table = slurp(runp / "summary.csv");
    std::istringstream lines(table);
    std::string header;
    std::getline(lines, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 10);
    const std::string svg = slurp(runp / "charts" / "hold.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    REQUIRE(run({"report", "--run-dir", runp.string()}) == 0);
    CHECK(slurp(runp / "summary.csv") == table);
}

TEST_CASE("report: missing run directory exits 1") {
    TempDir d("report_empty");
    CHECK(run({"report", "--run-dir", (d.path / "missing").string()}) == 1);
    CHECK(run({"report", "--run-dir", d.path.string()}) == 1);
}

TEST_CASE("bench: one row per env count and samples equal N times steps") {
    BenchOptions o;
    o.section.env_counts = {1, 2, 4};
    o.section.steps = 16;
    o.section.repeats = 1;
    o.section.frame_steps = 128;
    o.workers = 1;
    std::ostringstream log;
    const auto rows = cmd_bench(o, log);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.samples == r.n_envs * 16);
        CHECK(r.samples_per_sec > 0.0);
    }
    const std::string csv = bench_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("config: overrides, env var, unknown keys") {
    json doc = train_config("out");
    apply_override(doc, "train.epochs=7");
    apply_override(doc, "env.mode=discrete");
    apply_override(doc, "backtest.rf=0.02");
    CHECK(doc["train"]["epochs"] == 7);
    CHECK(doc["env"]["mode"] == "discrete");
    CHECK(doc["backtest"]["rf"] == 0.02);
    CHECK_ERROR_CODE(apply_override(doc, "no_equals_sign"), ErrorCode::ConfigError);
    const auto cfg = parse_config(doc, fs::temp_directory_path());
    CHECK(cfg.train.epochs == 7);

    json unknown = train_config("out");
    unknown["colour"] = "blue";
    CHECK_ERROR_CODE(parse_config(unknown, fs::temp_directory_path()), ErrorCode::ConfigError);
    json dup = train_config("out");
    dup["agents"].push_back(dup["agents"][0]);
    dup["agents"][1]["name"] = "dqn_0";
    CHECK_ERROR_CODE(parse_config(dup, fs::temp_directory_path()), ErrorCode::ConfigError);

    ::setenv("VECFIN_OUTPUT_DIR", "/tmp/somewhere_else", 1);
    CHECK(default_output_dir() == fs::path("/tmp/somewhere_else"));
    json no_out = train_config("out");
    no_out.erase("output_dir");
    CHECK(parse_config(no_out, fs::temp_directory_path()).output_dir == fs::path("/tmp/somewhere_else"));
    ::unsetenv("VECFIN_OUTPUT_DIR");
    CHECK(default_output_dir() == fs::path("vecfin_out"));
}

}  // TEST_SUITE
