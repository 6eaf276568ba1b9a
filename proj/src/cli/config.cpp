#include "vecfin/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "vecfin/common/error.hpp"
#include "vecfin/data/augment.hpp"
#include "vecfin/data/csv_loader.hpp"
#include "vecfin/data/frame_io.hpp"

namespace vecfin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) {
        fail(ErrorCode::ConfigError, msg);
    }
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    require(j.is_object(), where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        require(allowed.count(key) > 0, "unknown key '" + key + "' in " + where);
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
}

fs::path existing(const fs::path& base, const std::string& p) {
    fs::path path = resolve(base, p);
    require(fs::exists(path), "file not found: " + path.string());
    return path;
}

DataSection parse_data(const json& j, const fs::path& base) {
    check_keys(j, "data",
               {"frame", "csv", "format", "assets", "synth", "indicators", "asset_subset", "subset_seed"});
    DataSection d;
    int sources = 0;
    if (j.contains("frame")) {
        d.frame = existing(base, j.at("frame").get<std::string>());
        ++sources;
    }
    if (j.contains("csv")) {
        d.csv = existing(base, j.at("csv").get<std::string>());
        ++sources;
    }
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        check_keys(s, "data.synth", {"kind", "steps", "assets", "seed", "params"});
        SynthSource src;
        src.kind = data::parse_synth_kind(s.value("kind", std::string("sine")));
        src.steps = s.value("steps", src.steps);
        src.assets = s.value("assets", src.assets);
        src.seed = s.value("seed", src.seed);
        if (s.contains("params")) {
            src.params = s.at("params").get<data::SynthParams>();
        }
        d.synth = src;
        ++sources;
    }
    require(sources == 1, "data needs exactly one of frame, csv or synth");
    d.format = j.value("format", d.format);
    require(d.format == "ohlcv" || d.format == "lob", "data.format must be ohlcv or lob");
    if (j.contains("assets")) {
        d.assets = j.at("assets").get<std::vector<std::string>>();
    }
    if (j.contains("indicators")) {
        const json& spec = j.at("indicators");
        if (spec.is_string()) {
            const auto name = spec.get<std::string>();
            require(name == "default" || name == "none", "data.indicators must be an object, default or none");
            d.indicators = name == "default" ? data::IndicatorSpec{} : data::IndicatorSpec::none();
        } else {
            d.indicators = spec.get<data::IndicatorSpec>();
        }
        d.indicators->validate();
    }
    d.asset_subset = j.value("asset_subset", d.asset_subset);
    d.subset_seed = j.value("subset_seed", d.subset_seed);
    return d;
}

std::vector<AgentEntry> parse_agents(const json& j, const std::string& task) {
    require(j.is_array(), "agents must be a list");
    std::vector<AgentEntry> out;
    std::map<std::string, std::size_t> per_kind;
    for (const auto& entry : j) {
        require(entry.is_object() && entry.contains("kind"), "every agent needs a kind");
        const auto kind = agents::parse_agent_kind(entry.at("kind").get<std::string>());
        const std::size_t count = entry.value("count", std::size_t{1});
        require(count >= 1, "agent count must be >= 1");
        json overrides = entry;
        overrides.erase("name");
        overrides.erase("count");
        overrides.erase("seed");
        overrides.erase("asset_subset");
        overrides.erase("subset_seed");
        for (std::size_t c = 0; c < count; ++c) {
            AgentEntry a;
            a.config = task == "crypto" ? agents::AgentConfig::crypto_defaults(kind)
                                        : agents::AgentConfig::stock_defaults(kind);
            from_json(overrides, a.config);
            a.config.validate();
            const std::size_t index = per_kind[agents::to_string(kind)]++;
            if (entry.contains("name")) {
                a.name = entry.at("name").get<std::string>();
                if (count > 1) {
                    a.name += "_" + std::to_string(c);
                }
            } else {
                a.name = agents::to_string(kind) + "_" + std::to_string(index);
            }
            a.seed = entry.value("seed", std::uint64_t{out.size()}) + (count > 1 ? c : 0);
            a.asset_subset = entry.value("asset_subset", a.asset_subset);
            a.subset_seed = entry.value("subset_seed", a.seed);
            out.push_back(std::move(a));
        }
    }
    std::set<std::string> names;
    for (const auto& a : out) {
        require(names.insert(a.name).second, "duplicate agent name: " + a.name);
    }
    return out;
}

EnsembleSection parse_ensemble(const json& j, const fs::path& base, const std::string& task) {
    check_keys(j, "ensemble", {"presets", "custom", "discard_threshold", "temperature", "checkpoints"});
    EnsembleSection e;
    e.presets = j.value("presets", e.presets);
    for (const auto& name : e.presets) {
        ensemble::preset(name, task);
    }
    e.discard_threshold = j.value("discard_threshold", e.discard_threshold);
    e.temperature = j.value("temperature", e.temperature);
    require(e.temperature > 0.0, "ensemble.temperature must be positive");
    if (j.contains("custom")) {
        for (const auto& c : j.at("custom")) {
            check_keys(c, "ensemble.custom", {"name", "rule", "members", "discard_threshold", "temperature"});
            require(c.contains("name") && c.contains("rule") && c.contains("members"),
                    "custom ensembles need name, rule and members");
            require(c.at("rule").is_string(), "an ensemble takes exactly one rule");
            CustomEnsemble ce;
            ce.name = c.at("name").get<std::string>();
            ce.rule = ensemble::parse_rule(c.at("rule").get<std::string>());
            ce.members = c.at("members").get<std::vector<std::string>>();
            require(!ce.members.empty(), "ensemble " + ce.name + " has no members");
            ce.discard_threshold = c.value("discard_threshold", e.discard_threshold);
            ce.temperature = c.value("temperature", e.temperature);
            require(ce.temperature > 0.0, "ensemble temperature must be positive");
            e.custom.push_back(std::move(ce));
        }
    }
    if (j.contains("checkpoints")) {
        for (const auto& p : j.at("checkpoints")) {
            e.checkpoints.push_back(existing(base, p.get<std::string>()));
        }
    }
    return e;
}

BacktestSection parse_backtest(const json& j) {
    check_keys(j, "backtest",
               {"train", "val", "test", "start", "rf", "periods_per_year", "report_members", "baselines",
                "augment_magnitude"});
    BacktestSection b;
    b.train = j.value("train", b.train);
    b.val = j.value("val", b.val);
    b.test = j.value("test", b.test);
    if (j.contains("start")) {
        b.start = j.at("start").get<std::size_t>();
    }
    b.rf = j.value("rf", b.rf);
    b.periods_per_year = j.value("periods_per_year", b.periods_per_year);
    b.report_members = j.value("report_members", b.report_members);
    b.baselines = j.value("baselines", b.baselines);
    b.augment_magnitude = j.value("augment_magnitude", b.augment_magnitude);
    require(b.train >= 1 && b.test >= 1, "backtest train and test must be >= 1");
    require(b.periods_per_year > 0.0, "backtest.periods_per_year must be positive");
    require(b.augment_magnitude >= 0.0 && b.augment_magnitude < 1.0,
            "backtest.augment_magnitude must be in [0, 1)");
    return b;
}

BenchSection parse_bench(const json& j) {
    check_keys(j, "bench", {"env_counts", "steps", "repeats", "task", "frame_steps"});
    BenchSection b;
    b.env_counts = j.value("env_counts", b.env_counts);
    b.steps = j.value("steps", b.steps);
    b.repeats = j.value("repeats", b.repeats);
    b.task = j.value("task", b.task);
    b.frame_steps = j.value("frame_steps", b.frame_steps);
    require(!b.env_counts.empty(), "bench.env_counts is empty");
    for (auto n : b.env_counts) {
        require(n >= 1, "bench env counts must be >= 1");
    }
    require(b.steps >= 1 && b.repeats >= 1, "bench steps and repeats must be >= 1");
    require(b.task == "stock" || b.task == "crypto", "bench.task must be stock or crypto");
    require(b.frame_steps >= 2, "bench.frame_steps must be >= 2");
    return b;
}

}  // namespace

fs::path default_output_dir() {
    if (const char* env = std::getenv("VECFIN_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "vecfin_out";
}

json read_config_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::ConfigError, "cannot open config " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like key.path=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json* node = &doc;
    std::size_t pos = 0;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        require(!part.empty(), "empty key segment in override " + assignment);
        if (node->is_null()) {
            *node = json::object();
        }
        require(node->is_object(), "override path crosses a non-object at " + part);
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        pos = dot + 1;
    }
    *node = value;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
    check_keys(doc, "config",
               {"task", "master_seed", "output_dir", "workers", "data", "env", "agents", "train", "ensemble",
                "backtest", "bench"});
    RunConfig c;
    c.source = doc;
    c.task = doc.value("task", c.task);
    require(c.task == "stock" || c.task == "crypto", "task must be stock or crypto");
    c.master_seed = doc.value("master_seed", c.master_seed);
    c.output_dir = doc.contains("output_dir") ? resolve(base_dir, doc.at("output_dir").get<std::string>())
                                              : default_output_dir();
    c.workers = doc.value("workers", c.workers);
    if (doc.contains("data")) {
        c.data = parse_data(doc.at("data"), base_dir);
    }
    if (doc.contains("env")) {
        c.env = doc.at("env").get<env::EnvConfig>();
    }
    c.env.validate();
    if (doc.contains("agents")) {
        c.agents = parse_agents(doc.at("agents"), c.task);
    }
    if (doc.contains("train")) {
        const json& t = doc.at("train");
        check_keys(t, "train", {"epochs", "rollout_steps", "num_envs", "range", "augment_magnitude"});
        c.train = t.get<agents::TrainSchedule>();
        if (t.contains("range")) {
            const auto r = t.at("range").get<std::vector<std::size_t>>();
            require(r.size() == 2 && r[0] + 2 <= r[1], "train.range must be [begin, end) with at least 2 rows");
            c.train_range = std::make_pair(r[0], r[1]);
        }
        c.train_augment_magnitude = t.value("augment_magnitude", c.train_augment_magnitude);
        require(c.train_augment_magnitude >= 0.0 && c.train_augment_magnitude < 1.0,
                "train.augment_magnitude must be in [0, 1)");
    }
    c.train.validate();
    if (doc.contains("ensemble")) {
        c.ensemble = parse_ensemble(doc.at("ensemble"), base_dir, c.task);
    }
    if (doc.contains("backtest")) {
        c.backtest = parse_backtest(doc.at("backtest"));
    }
    if (doc.contains("bench")) {
        c.bench = parse_bench(doc.at("bench"));
    }
    std::set<std::string> names;
    for (const auto& a : c.agents) {
        names.insert(a.name);
    }
    for (const auto& e : c.ensemble.custom) {
        for (const auto& m : e.members) {
            require(names.count(m) > 0, "ensemble " + e.name + " references unknown agent " + m);
        }
    }
    return c;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    json doc = read_config_json(path);
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_config(doc, base);
}

data::MarketFrame load_data(const DataSection& section) {
    data::MarketFrame frame;
    if (section.frame) {
        frame = data::load_frame(*section.frame);
    } else if (section.csv) {
        frame = section.format == "lob" ? data::load_lob_csv(*section.csv)
                                        : data::load_ohlcv_csv(*section.csv, section.assets);
    } else if (section.synth) {
        const auto& s = *section.synth;
        frame = data::synth_series(s.kind, s.steps, s.assets, s.seed, s.params);
    } else {
        fail(ErrorCode::ConfigError, "config has no data section");
    }
    if (section.asset_subset > 0) {
        frame = data::select_assets(
            frame, data::sample_asset_subset(frame.num_assets(), section.asset_subset, section.subset_seed));
    }
    if (section.indicators) {
        frame = data::compute_indicators(frame, *section.indicators);
    }
    return frame;
}

}  // namespace vecfin::cli
