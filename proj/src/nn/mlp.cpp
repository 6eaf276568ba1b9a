#include "vecfin/nn/mlp.hpp"

#include <cmath>

#include "vecfin/common/error.hpp"
#include "vecfin/common/rng.hpp"

namespace vecfin::nn {

namespace {

void apply_activation(Matrix& z, Activation a) {
    switch (a) {
    case Activation::identity: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    }
}

// dL/dz from dL/dy and the post-activation output y.
Matrix activation_backward(const Matrix& dy, const Matrix& y, Activation a) {
    switch (a) {
    case Activation::identity: return dy;
    case Activation::relu: return (y.array() > 0.0).select(dy, 0.0);
    case Activation::tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
    }
    return dy;
}

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    fail(ErrorCode::ConfigError, "unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    }
    return "identity";
}

std::size_t Mlp::input_size() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t Mlp::output_size() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::vector<std::size_t> Mlp::layer_sizes() const {
    std::vector<std::size_t> sizes;
    if (layers.empty()) {
        return sizes;
    }
    sizes.push_back(input_size());
    for (const auto& l : layers) {
        sizes.push_back(static_cast<std::size_t>(l.weight.rows()));
    }
    return sizes;
}

std::size_t Mlp::num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    }
    return n;
}

std::vector<std::span<double>> Mlp::parameter_blocks() {
    std::vector<std::span<double>> blocks;
    for (auto& l : layers) {
        blocks.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        blocks.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return blocks;
}

std::vector<std::span<const double>> Mlp::parameter_blocks() const {
    std::vector<std::span<const double>> blocks;
    for (const auto& l : layers) {
        blocks.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        blocks.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return blocks;
}

bool Mlp::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layers.size() != b.layers.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& x = a.layers[i];
        const auto& y = b.layers[i];
        if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
            x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias) {
            return false;
        }
    }
    return true;
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    for (const auto& l : net.layers) {
        g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
        g.bias.push_back(RowVector::Zero(l.bias.size()));
    }
    return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
    if (other.weight.size() != weight.size()) {
        fail(ErrorCode::ShapeMismatch, "gradient sets differ in layer count");
    }
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] += other.weight[i];
        bias[i] += other.bias[i];
    }
    return *this;
}

Gradients& Gradients::operator*=(double s) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] *= s;
        bias[i] *= s;
    }
    return *this;
}

double Gradients::squared_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        s += weight[i].squaredNorm() + bias[i].squaredNorm();
    }
    return s;
}

std::vector<std::span<const double>> Gradients::blocks() const {
    std::vector<std::span<const double>> out;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        out.emplace_back(weight[i].data(), static_cast<std::size_t>(weight[i].size()));
        out.emplace_back(bias[i].data(), static_cast<std::size_t>(bias[i].size()));
    }
    return out;
}

Matrix forward(const Mlp& net, const Matrix& x, ForwardCache* cache) {
    if (net.layers.empty()) {
        fail(ErrorCode::ShapeMismatch, "network has no layers");
    }
    if (static_cast<std::size_t>(x.cols()) != net.input_size()) {
        fail(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.cols()) +
                                           " columns, network expects " +
                                           std::to_string(net.input_size()));
    }
    if (cache) {
        cache->inputs.clear();
        cache->outputs.clear();
    }
    Matrix h = x;
    for (const auto& layer : net.layers) {
        Matrix z = h * layer.weight.transpose();
        z.rowwise() += layer.bias;
        apply_activation(z, layer.activation);
        if (cache) {
            cache->inputs.push_back(std::move(h));
        }
        h = std::move(z);
        if (cache) {
            cache->outputs.push_back(h);
        }
    }
    return h;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream) {
    const std::size_t L = net.layers.size();
    if (cache.inputs.size() != L || cache.outputs.size() != L) {
        fail(ErrorCode::ShapeMismatch, "forward cache does not match network");
    }
    const Matrix& out = cache.outputs.back();
    if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
        fail(ErrorCode::ShapeMismatch, "upstream gradient shape does not match network output");
    }
    BackwardResult r;
    r.grads.weight.resize(L);
    r.grads.bias.resize(L);
    Matrix dy = upstream;
    for (std::size_t li = L; li-- > 0;) {
        const auto& layer = net.layers[li];
        Matrix dz = activation_backward(dy, cache.outputs[li], layer.activation);
        r.grads.weight[li] = dz.transpose() * cache.inputs[li];
        r.grads.bias[li] = dz.colwise().sum();
        dy = dz * layer.weight;
    }
    r.input_grad = std::move(dy);
    return r;
}

double init_bound(std::size_t fan_in, std::size_t fan_out, Activation activation) {
    if (activation == Activation::relu) {
        return std::sqrt(6.0 / static_cast<double>(fan_in));
    }
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Mlp init_params(std::span<const std::size_t> sizes, Activation hidden, std::uint64_t seed,
                Activation output) {
    if (sizes.size() < 2) {
        fail(ErrorCode::InvalidArgument, "a network needs an input and an output size");
    }
    for (auto s : sizes) {
        if (s < 1) {
            fail(ErrorCode::InvalidArgument, "layer sizes must be >= 1");
        }
    }
    Rng rng = make_rng(seed, 0x5EED);
    Mlp net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        DenseLayer layer;
        layer.activation = l + 2 == sizes.size() ? output : hidden;
        const auto in = static_cast<Eigen::Index>(sizes[l]);
        const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
        const double bound = init_bound(sizes[l], sizes[l + 1], layer.activation);
        layer.weight.resize(out, in);
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            layer.weight.data()[i] = uniform(rng, -bound, bound);
        }
        layer.bias = RowVector::Zero(out);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
    if (target.layer_sizes() != source.layer_sizes()) {
        fail(ErrorCode::ShapeMismatch, "soft update between differently shaped networks");
    }
    if (tau == 1.0) {
        target = source;
        return;
    }
    if (tau == 0.0) {
        return;
    }
    for (std::size_t i = 0; i < target.layers.size(); ++i) {
        auto& t = target.layers[i];
        const auto& s = source.layers[i];
        t.weight = tau * s.weight + (1.0 - tau) * t.weight;
        t.bias = tau * s.bias + (1.0 - tau) * t.bias;
    }
}

double clip_global_norm(std::span<Gradients* const> grads, double max_norm) {
    double sq = 0.0;
    for (const Gradients* g : grads) {
        sq += g->squared_norm();
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (Gradients* g : grads) {
            *g *= s;
        }
    }
    return norm;
}

}  // namespace vecfin::nn
