#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "util.hpp"
#include "vecfin/backtest/report_io.hpp"
#include "vecfin/cli/commands.hpp"

namespace vecfin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Entry {
    std::string name;
    backtest::MetricsReport metrics;
    std::optional<backtest::EquityCurve> curve;
};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<Entry> collect(const fs::path& dir) {
    std::vector<Entry> entries;
    const fs::path manifest = dir / "manifest.json";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        const json doc = json::parse(in);
        for (const auto& s : doc.at("strategies")) {
            Entry e;
            e.metrics = backtest::read_metrics_json(dir / s.at("metrics").get<std::string>(), &e.name);
            const fs::path eq = dir / s.value("equity", std::string("equity/" + e.name + ".csv"));
            if (fs::exists(eq)) {
                e.curve = backtest::read_equity_csv(eq);
            }
            entries.push_back(std::move(e));
        }
        return entries;
    }
    if (!fs::is_directory(dir / "metrics")) {
        return entries;
    }
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir / "metrics")) {
        if (f.path().extension() == ".json") {
            files.push_back(f.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        Entry e;
        e.metrics = backtest::read_metrics_json(f, &e.name);
        const fs::path eq = dir / "equity" / (f.stem().string() + ".csv");
        if (fs::exists(eq)) {
            e.curve = backtest::read_equity_csv(eq);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string text_table(const std::vector<Entry>& entries) {
    const auto& names = backtest::metric_names();
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"strategy"};
    header.insert(header.end(), names.begin(), names.end());
    rows.push_back(header);
    for (const auto& e : entries) {
        std::vector<std::string> row{e.name};
        for (const auto& m : names) {
            row.push_back(fmt(backtest::metric_value(e.metrics, m)));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            width[c] = std::max(width[c], r[c].size());
        }
    }
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const auto& cell = rows[i][c];
            const std::string pad(width[c] - cell.size(), ' ');
            out += c == 0 ? cell + pad : "  " + pad + cell;
        }
        out += '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) {
                total += w + 2;
            }
            out += std::string(total - 2, '-') + '\n';
        }
    }
    return out;
}

std::string csv_table(const std::vector<Entry>& entries) {
    const auto& names = backtest::metric_names();
    std::string out = "strategy";
    for (const auto& m : names) {
        out += "," + m;
    }
    out += '\n';
    for (const auto& e : entries) {
        out += e.name;
        for (const auto& m : names) {
            out += "," + backtest::format_double(backtest::metric_value(e.metrics, m));
        }
        out += '\n';
    }
    return out;
}

/// Cumulative return (w_t / w_0 - 1) against the point index.
std::string svg_chart(const std::string& title, const backtest::EquityCurve& curve) {
    const double W = 640, H = 360, L = 60, R = 20, T = 30, B = 40;
    std::vector<double> y;
    const double w0 = curve.wealth.empty() ? 1.0 : curve.wealth.front();
    for (double w : curve.wealth) {
        y.push_back(w0 != 0.0 ? w / w0 - 1.0 : 0.0);
    }
    double lo = 0.0, hi = 0.0;
    for (double v : y) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi - lo < 1e-12) {
        hi = lo + 1e-3;
    }
    const std::size_t n = y.size();
    auto px = [&](std::size_t i) { return L + (n > 1 ? (W - L - R) * i / double(n - 1) : 0.0); };
    auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
         "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
    s += "  <rect x=\"0\" y=\"0\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) + "\" fill=\"white\"/>\n";
    s += "  <text x=\"" + fmt(L) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape_xml(title) + " cumulative return</text>\n";
    s += "  <line x1=\"" + fmt(L) + "\" y1=\"" + fmt(H - B) + "\" x2=\"" + fmt(W - R) + "\" y2=\"" +
         fmt(H - B) + "\" stroke=\"black\"/>\n";
    s += "  <line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T) + "\" x2=\"" + fmt(L) + "\" y2=\"" + fmt(H - B) +
         "\" stroke=\"black\"/>\n";
    s += "  <line x1=\"" + fmt(L) + "\" y1=\"" + fmt(py(0.0), "%.2f") + "\" x2=\"" + fmt(W - R) + "\" y2=\"" +
         fmt(py(0.0), "%.2f") + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    for (double v : {lo, hi}) {
        s += "  <text x=\"" + fmt(L - 4) + "\" y=\"" + fmt(py(v) + 4, "%.2f") +
             "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt(v, "%.3g") +
             "</text>\n";
    }
    s += "  <text x=\"" + fmt(W - R) + "\" y=\"" + fmt(H - B + 16) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + std::to_string(n) +
         " points</text>\n";
    s += "  <polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::isfinite(y[i]) ? y[i] : 0.0;
        s += (i ? " " : "") + fmt(px(i), "%.2f") + "," + fmt(py(v), "%.2f");
    }
    s += "\"/>\n</svg>\n";
    return s;
}

}  // namespace

void cmd_report(const fs::path& run_dir, std::ostream& log) {
    if (!fs::is_directory(run_dir)) {
        fail(ErrorCode::ConfigError, "run directory not found: " + run_dir.string());
    }
    const auto entries = collect(run_dir);
    if (entries.empty()) {
        fail(ErrorCode::ConfigError, "no metrics artifacts in " + run_dir.string());
    }
    const std::string table = text_table(entries);
    write_text(run_dir / "summary.txt", table);
    write_text(run_dir / "summary.csv", csv_table(entries));
    std::size_t charts = 0;
    for (const auto& e : entries) {
        if (e.curve) {
            write_text(run_dir / "charts" / (e.name + ".svg"), svg_chart(e.name, *e.curve));
            ++charts;
        }
    }
    log << table << "wrote summary.txt, summary.csv and " << charts << " chart(s) to " << run_dir.string()
        << "\n";
}

}  // namespace vecfin::cli
