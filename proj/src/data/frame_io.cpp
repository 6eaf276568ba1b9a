#include "vecfin/data/frame_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vecfin/common/error.hpp"

namespace vecfin::data {

static_assert(std::endian::native == std::endian::little, "frame files are little-endian");

namespace {

constexpr char kMagic[8] = {'V', 'F', 'F', 'R', 'A', 'M', 'E', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        fail(ErrorCode::IoError, "truncated frame file");
    }
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) {
        fail(ErrorCode::IoError, "truncated frame file");
    }
    return s;
}

void put_doubles(std::ostream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) {
        fail(ErrorCode::IoError, "truncated frame file");
    }
}

}  // namespace

void write_frame(std::ostream& out, const MarketFrame& frame) {
    frame.validate();
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, 1);
    const std::uint64_t T = frame.num_steps();
    const std::uint64_t K = frame.num_assets();
    const std::uint64_t I = frame.num_features();
    put(out, T);
    put(out, K);
    put(out, I);
    for (const auto& id : frame.asset_ids) put_string(out, id);
    for (const auto& name : frame.feature_names) put_string(out, name);
    put<std::uint8_t>(out, frame.indicator_spec ? 1 : 0);
    if (frame.indicator_spec) {
        put_string(out, nlohmann::json(*frame.indicator_spec).dump());
    }
    out.write(reinterpret_cast<const char*>(frame.timestamps.data()),
              static_cast<std::streamsize>(T * sizeof(std::int64_t)));
    for (const Matrix* m : {&frame.prices, &frame.open, &frame.high, &frame.low, &frame.volume}) {
        put_doubles(out, m->data(), T * K);
    }
    put_doubles(out, frame.features.data(), frame.features.size());
}

MarketFrame read_frame(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        fail(ErrorCode::IoError, "not a frame file");
    }
    if (get<std::uint32_t>(in) != 1) {
        fail(ErrorCode::IoError, "unsupported frame file version");
    }
    const auto T = get<std::uint64_t>(in);
    const auto K = get<std::uint64_t>(in);
    const auto I = get<std::uint64_t>(in);
    MarketFrame f;
    for (std::uint64_t k = 0; k < K; ++k) f.asset_ids.push_back(get_string(in));
    for (std::uint64_t i = 0; i < I; ++i) f.feature_names.push_back(get_string(in));
    if (get<std::uint8_t>(in) != 0) {
        f.indicator_spec = nlohmann::json::parse(get_string(in)).get<IndicatorSpec>();
    }
    f.timestamps.resize(T);
    in.read(reinterpret_cast<char*>(f.timestamps.data()),
            static_cast<std::streamsize>(T * sizeof(std::int64_t)));
    for (Matrix* m : {&f.prices, &f.open, &f.high, &f.low, &f.volume}) {
        m->resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(K));
        get_doubles(in, m->data(), T * K);
    }
    f.features.resize(T * K * I);
    get_doubles(in, f.features.data(), f.features.size());
    f.validate();
    return f;
}

void save_frame(const std::filesystem::path& path, const MarketFrame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    write_frame(out, frame);
}

MarketFrame load_frame(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return read_frame(in);
}

std::string frame_summary(const MarketFrame& frame) {
    std::ostringstream os;
    os << "T=" << frame.num_steps() << "\n";
    os << "K=" << frame.num_assets() << "\n";
    os << "I=" << frame.num_features() << "\n";
    if (!frame.timestamps.empty()) {
        os << "span=" << frame.timestamps.front() << ".." << frame.timestamps.back() << "\n";
    }
    os << "assets=";
    for (std::size_t k = 0; k < frame.asset_ids.size(); ++k) {
        os << (k ? "," : "") << frame.asset_ids[k];
    }
    os << "\nfeatures=";
    for (std::size_t i = 0; i < frame.feature_names.size(); ++i) {
        os << (i ? "," : "") << frame.feature_names[i];
    }
    os << "\n";
    return os.str();
}

}  // namespace vecfin::data
