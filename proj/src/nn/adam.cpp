#include "vecfin/nn/adam.hpp"

#include <cmath>

#include "vecfin/common/error.hpp"

namespace vecfin::nn {

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
    if (params.size() != grads.size()) {
        fail(ErrorCode::ShapeMismatch, "parameter and gradient block counts differ");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size()) {
            fail(ErrorCode::ShapeMismatch, "parameter and gradient block sizes differ");
        }
        for (double g : grads[b]) {
            if (!std::isfinite(g)) {
                fail(ErrorCode::NonFiniteGradient, "gradient contains a non-finite value");
            }
        }
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    } else if (state.m.size() != params.size()) {
        fail(ErrorCode::ShapeMismatch, "optimizer state does not match parameters");
    }

    ++state.step;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = state.m[b];
        auto& v = state.v[b];
        if (m.size() != params[b].size()) {
            fail(ErrorCode::ShapeMismatch, "optimizer state does not match parameters");
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = grads[b][i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[b][i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
    auto p = net.parameter_blocks();
    auto g = grads.blocks();
    adam_step(p, g, state);
}

}  // namespace vecfin::nn
