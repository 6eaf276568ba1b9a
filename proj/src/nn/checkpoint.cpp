#include "vecfin/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "vecfin/common/error.hpp"

namespace vecfin::nn {

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");

namespace {

constexpr char kMagic[8] = {'V', 'F', 'M', 'L', 'P', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        fail(ErrorCode::IoError, "truncated network block");
    }
    return v;
}

}  // namespace

void write_mlp(std::ostream& out, const Mlp& net) {
    out.write(kMagic, sizeof(kMagic));
    const auto sizes = net.layer_sizes();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
    for (auto s : sizes) {
        put<std::uint64_t>(out, s);
    }
    for (const auto& l : net.layers) {
        put<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    }
    for (const auto& l : net.layers) {
        out.write(reinterpret_cast<const char*>(l.weight.data()),
                  static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.bias.data()),
                  static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
    }
}

Mlp read_mlp(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        fail(ErrorCode::IoError, "not a network block");
    }
    const auto L = get<std::uint32_t>(in);
    if (L == 0 || L > 64) {
        fail(ErrorCode::IoError, "implausible layer count in network block");
    }
    std::vector<std::uint64_t> sizes(L + 1);
    for (auto& s : sizes) {
        s = get<std::uint64_t>(in);
        if (s == 0 || s > (1u << 20)) {
            fail(ErrorCode::IoError, "implausible layer size in network block");
        }
    }
    Mlp net;
    net.layers.resize(L);
    for (auto& l : net.layers) {
        const auto tag = get<std::uint8_t>(in);
        if (tag > 2) {
            fail(ErrorCode::IoError, "unknown activation tag in network block");
        }
        l.activation = static_cast<Activation>(tag);
    }
    for (std::uint32_t i = 0; i < L; ++i) {
        auto& l = net.layers[i];
        l.weight.resize(static_cast<Eigen::Index>(sizes[i + 1]), static_cast<Eigen::Index>(sizes[i]));
        l.bias.resize(static_cast<Eigen::Index>(sizes[i + 1]));
        in.read(reinterpret_cast<char*>(l.weight.data()),
                static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l.bias.data()),
                static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
        if (!in) {
            fail(ErrorCode::IoError, "truncated network block");
        }
    }
    return net;
}

}  // namespace vecfin::nn
