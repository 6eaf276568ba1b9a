#include "vecfin/data/csv_loader.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vecfin/common/error.hpp"

namespace vecfin::data {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line);
}

std::int64_t parse_int(const std::string& s, const std::string& source, std::size_t line) {
    std::int64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        fail(ErrorCode::MalformedRow, where(source, line) + ": bad integer timestamp '" + s + "'");
    }
    return v;
}

double parse_real(const std::string& s, const std::string& source, std::size_t line,
                  const char* field) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        fail(ErrorCode::MalformedRow,
             where(source, line) + ": bad number '" + s + "' in field " + field);
    }
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return in;
}

}  // namespace

MarketFrame parse_ohlcv_csv(std::istream& in, const std::string& source,
                            const std::optional<std::vector<std::string>>& expected_assets) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        fail(ErrorCode::MalformedRow, where(source, 1) + ": missing header");
    }
    ++line_no;
    {
        auto header = split(trim(line), ',');
        for (auto& h : header) h = trim(h);
        const std::vector<std::string> want{"timestamp", "asset", "open", "high",
                                            "low",       "close", "volume"};
        if (header != want) {
            fail(ErrorCode::MalformedRow,
                 where(source, 1) + ": header must be timestamp,asset,open,high,low,close,volume");
        }
    }

    std::map<std::string, std::map<std::int64_t, Bar>> by_asset;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) {
            continue;
        }
        auto f = split(row, ',');
        if (f.size() != 7) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": expected 7 fields, got " +
                                              std::to_string(f.size()));
        }
        for (auto& x : f) x = trim(x);
        Bar bar;
        bar.timestamp = parse_int(f[0], source, line_no);
        bar.asset_id = f[1];
        if (bar.asset_id.empty()) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": empty asset id");
        }
        bar.open = parse_real(f[2], source, line_no, "open");
        bar.high = parse_real(f[3], source, line_no, "high");
        bar.low = parse_real(f[4], source, line_no, "low");
        bar.close = parse_real(f[5], source, line_no, "close");
        bar.volume = parse_real(f[6], source, line_no, "volume");
        if (bar.open <= 0.0 || bar.high <= 0.0 || bar.low <= 0.0 || bar.close <= 0.0) {
            fail(ErrorCode::NonPositivePrice, where(source, line_no) + ": prices must be > 0");
        }
        if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close) ||
            bar.low > bar.high) {
            fail(ErrorCode::MalformedRow,
                 where(source, line_no) + ": bar violates low <= open,close <= high");
        }
        if (bar.volume < 0.0) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": negative volume");
        }
        auto& series = by_asset[bar.asset_id];
        if (!series.emplace(bar.timestamp, bar).second) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": duplicate (timestamp, asset)");
        }
    }

    if (expected_assets) {
        std::map<std::string, std::map<std::int64_t, Bar>> kept;
        for (const auto& id : *expected_assets) {
            auto it = by_asset.find(id);
            if (it == by_asset.end()) {
                fail(ErrorCode::MissingAsset, source + ": asset '" + id + "' not present");
            }
            kept.emplace(id, std::move(it->second));
        }
        by_asset = std::move(kept);
    }
    if (by_asset.empty()) {
        fail(ErrorCode::InsufficientData, source + ": no data rows");
    }
    for (const auto& [id, series] : by_asset) {
        if (series.size() < 2) {
            fail(ErrorCode::InsufficientData, source + ": asset '" + id + "' has fewer than 2 rows");
        }
    }

    std::set<std::int64_t> common;
    for (const auto& [ts, bar] : by_asset.begin()->second) {
        common.insert(ts);
    }
    for (const auto& [id, series] : by_asset) {
        std::set<std::int64_t> next;
        for (auto ts : common) {
            if (series.count(ts)) {
                next.insert(ts);
            }
        }
        common = std::move(next);
    }
    if (common.empty()) {
        fail(ErrorCode::EmptyIntersection, source + ": assets share no timestamps");
    }

    const auto T = static_cast<Eigen::Index>(common.size());
    const auto K = static_cast<Eigen::Index>(by_asset.size());
    Matrix open(T, K), high(T, K), low(T, K), close(T, K), volume(T, K);
    std::vector<std::string> ids;
    Eigen::Index k = 0;
    for (const auto& [id, series] : by_asset) {
        ids.push_back(id);
        Eigen::Index t = 0;
        for (auto ts : common) {
            const Bar& b = series.at(ts);
            open(t, k) = b.open;
            high(t, k) = b.high;
            low(t, k) = b.low;
            close(t, k) = b.close;
            volume(t, k) = b.volume;
            ++t;
        }
        ++k;
    }
    return make_frame(std::vector<std::int64_t>(common.begin(), common.end()), std::move(ids),
                      std::move(open), std::move(high), std::move(low), std::move(close),
                      std::move(volume));
}

MarketFrame load_ohlcv_csv(const std::filesystem::path& path,
                           const std::optional<std::vector<std::string>>& expected_assets) {
    auto in = open_input(path);
    return parse_ohlcv_csv(in, path.string(), expected_assets);
}

MarketFrame parse_lob_csv(std::istream& in, const std::string& source, const std::string& asset_id) {
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::MalformedRow, where(source, 1) + ": missing header");
    }
    auto header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header.size() < 2 || header[0] != "timestamp" || header[1] != "price") {
        fail(ErrorCode::MalformedRow, where(source, 1) + ": header must start with timestamp,price");
    }
    std::vector<std::string> names(header.begin() + 2, header.end());
    const std::size_t I = names.size();

    std::vector<std::int64_t> ts;
    std::vector<double> price;
    std::vector<double> features;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) {
            continue;
        }
        auto f = split(row, ',');
        if (f.size() != header.size()) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields");
        }
        for (auto& x : f) x = trim(x);
        const auto t = parse_int(f[0], source, line_no);
        if (!ts.empty() && t <= ts.back()) {
            fail(ErrorCode::MalformedRow, where(source, line_no) + ": timestamps must increase");
        }
        const double p = parse_real(f[1], source, line_no, "price");
        if (p <= 0.0) {
            fail(ErrorCode::NonPositivePrice, where(source, line_no) + ": price must be > 0");
        }
        ts.push_back(t);
        price.push_back(p);
        for (std::size_t i = 0; i < I; ++i) {
            features.push_back(parse_real(f[2 + i], source, line_no, names[i].c_str()));
        }
    }
    if (ts.size() < 2) {
        fail(ErrorCode::InsufficientData, source + ": need at least 2 rows");
    }
    Matrix close = Eigen::Map<Matrix>(price.data(), static_cast<Eigen::Index>(price.size()), 1);
    MarketFrame frame = make_close_only_frame(std::move(ts), {asset_id}, std::move(close));
    frame.features = std::move(features);
    frame.feature_names = std::move(names);
    frame.validate();
    return frame;
}

MarketFrame load_lob_csv(const std::filesystem::path& path, const std::string& asset_id) {
    auto in = open_input(path);
    return parse_lob_csv(in, path.string(), asset_id);
}

void write_ohlcv_csv(const std::filesystem::path& path, const MarketFrame& frame) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << "timestamp,asset,open,high,low,close,volume\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t t = 0; t < frame.num_steps(); ++t) {
        const auto r = static_cast<Eigen::Index>(t);
        for (std::size_t k = 0; k < frame.num_assets(); ++k) {
            const auto c = static_cast<Eigen::Index>(k);
            out << frame.timestamps[t] << ',' << frame.asset_ids[k] << ',' << num(frame.open(r, c))
                << ',' << num(frame.high(r, c)) << ',' << num(frame.low(r, c)) << ','
                << num(frame.prices(r, c)) << ',' << num(frame.volume(r, c)) << '\n';
        }
    }
}

}  // namespace vecfin::data
