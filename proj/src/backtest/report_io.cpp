#include "vecfin/backtest/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vecfin/common/error.hpp"

namespace vecfin::backtest {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_equity_csv(const std::filesystem::path& path, const EquityCurve& curve) {
    auto out = open_out(path);
    out << "timestamp,wealth,return\n";
    for (std::size_t t = 0; t < curve.size(); ++t) {
        const double r = t == 0 ? 0.0 : curve.wealth[t] / curve.wealth[t - 1] - 1.0;
        out << curve.timestamps[t] << ',' << format_double(curve.wealth[t]) << ','
            << format_double(r) << '\n';
    }
}

EquityCurve read_equity_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "timestamp,wealth,return") {
        fail(ErrorCode::MalformedRow, path.string() + ":1: bad equity header");
    }
    EquityCurve curve;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string ts, wealth;
        if (!std::getline(row, ts, ',') || !std::getline(row, wealth, ',')) {
            fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(lineno) +
                                              ": expected timestamp,wealth,return");
        }
        try {
            curve.append(std::stoll(ts), std::stod(wealth));
        } catch (const std::exception&) {
            fail(ErrorCode::MalformedRow,
                 path.string() + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    return curve;
}

void write_trades_csv(const std::filesystem::path& path, const TradeLog& trades,
                      const std::vector<std::string>& asset_ids) {
    auto out = open_out(path);
    out << "timestamp,asset,quantity,price,fee\n";
    for (const auto& f : trades.fills()) {
        const std::string asset =
            f.asset < asset_ids.size() ? asset_ids[f.asset] : std::to_string(f.asset);
        out << f.timestamp << ',' << asset << ',' << format_double(f.quantity) << ','
            << format_double(f.price) << ',' << format_double(f.fee) << '\n';
    }
}

void write_metrics_json(const std::filesystem::path& path, const std::string& strategy,
                        const MetricsReport& report) {
    nlohmann::json j = report;
    j["strategy"] = strategy;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

MetricsReport read_metrics_json(const std::filesystem::path& path, std::string* strategy) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::IoError, path.string() + ": " + e.what());
    }
    if (strategy) {
        *strategy = j.value("strategy", path.stem().string());
    }
    return j.get<MetricsReport>();
}

}  // namespace vecfin::backtest
