#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vecfin/common/matrix.hpp"

namespace vecfin::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2 };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// y = act(x W^T + b); weight is out x in.
struct DenseLayer {
    Matrix weight;
    RowVector bias;
    Activation activation = Activation::identity;
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t input_size() const;
    std::size_t output_size() const;
    /// input, hidden..., output
    std::vector<std::size_t> layer_sizes() const;
    std::size_t num_parameters() const;

    std::vector<std::span<double>> parameter_blocks();
    std::vector<std::span<const double>> parameter_blocks() const;
    bool all_finite() const;
};

bool operator==(const Mlp& a, const Mlp& b);

/// Per-layer inputs and post-activation outputs from one forward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;

    const Matrix& output() const { return outputs.back(); }
};

/// Parameter-shaped gradient container.
struct Gradients {
    std::vector<Matrix> weight;
    std::vector<RowVector> bias;

    static Gradients zeros_like(const Mlp& net);
    Gradients& operator+=(const Gradients& other);
    Gradients& operator*=(double s);
    double squared_norm() const;
    std::vector<std::span<const double>> blocks() const;
};

struct BackwardResult {
    Gradients grads;
    /// dL/dx for the batch that produced the cache.
    Matrix input_grad;
};

Matrix forward(const Mlp& net, const Matrix& x, ForwardCache* cache = nullptr);

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream);

/// He-uniform bound sqrt(6 / fan_in) for relu layers, Xavier-uniform
/// sqrt(6 / (fan_in + fan_out)) otherwise; zero biases.
double init_bound(std::size_t fan_in, std::size_t fan_out, Activation activation);

Mlp init_params(std::span<const std::size_t> layer_sizes, Activation hidden, std::uint64_t seed,
                Activation output = Activation::identity);

/// target <- tau * source + (1 - tau) * target. tau = 1 copies exactly.
void soft_update(Mlp& target, const Mlp& source, double tau);

/// Rescales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Gradients* const> grads, double max_norm);

}  // namespace vecfin::nn
