#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vecfin/nn/mlp.hpp"

namespace vecfin::nn {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moments are allocated lazily to match the first parameter set seen.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// Bias-corrected Adam over matching lists of parameter and gradient blocks.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

}  // namespace vecfin::nn
