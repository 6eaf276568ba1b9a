#pragma once

#include <algorithm>
#include <cmath>

#include "vecfin/common/rng.hpp"
#include "vecfin/nn/mlp.hpp"

namespace gradcheck {

struct Result {
    int probes = 0;
    double max_rel_error = 0.0;
};

/// L = sum(W_up .* net(x)), so dL/dy = W_up.
inline double loss(const vecfin::nn::Mlp& net, const vecfin::Matrix& x, const vecfin::Matrix& up) {
    return (vecfin::nn::forward(net, x).array() * up.array()).sum();
}

/// Each probe builds a random net of 1 to 3 layers (at most 32 units), picks
/// one parameter or input entry and compares backward() to a central
/// difference with h = 1e-5.
inline Result run(vecfin::Rng& rng, int probes) {
    using namespace vecfin;
    Result out;
    const double h = 1e-5;
    for (int p = 0; p < probes; ++p) {
        const std::size_t layers = 1 + uniform_index(rng, 3);
        std::vector<std::size_t> sizes{1 + uniform_index(rng, 12)};
        for (std::size_t l = 0; l < layers; ++l) sizes.push_back(1 + uniform_index(rng, 32));
        const auto act = uniform_index(rng, 2) == 0 ? nn::Activation::relu : nn::Activation::tanh;
        const auto out_act = uniform_index(rng, 2) == 0 ? nn::Activation::identity : nn::Activation::tanh;
        nn::Mlp net = nn::init_params(sizes, act, rng(), out_act);
        for (auto& layer : net.layers) {
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = uniform(rng, -0.3, 0.3);
        }
        const auto B = static_cast<Eigen::Index>(1 + uniform_index(rng, 5));
        Matrix x(B, static_cast<Eigen::Index>(sizes.front()));
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.5, 1.5);
        Matrix up(B, static_cast<Eigen::Index>(sizes.back()));
        for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = uniform(rng, -1.0, 1.0);

        nn::ForwardCache cache;
        nn::forward(net, x, &cache);
        const auto grads = nn::backward(net, cache, up);

        double analytic = 0.0;
        double numeric = 0.0;
        const std::size_t which = uniform_index(rng, 4);
        if (which == 0) {
            const Eigen::Index j = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(x.size())));
            analytic = grads.input_grad.data()[j];
            Matrix xp = x, xm = x;
            xp.data()[j] += h;
            xm.data()[j] -= h;
            numeric = (loss(net, xp, up) - loss(net, xm, up)) / (2 * h);
        } else {
            const std::size_t l = uniform_index(rng, net.layers.size());
            const bool bias = which == 1;
            double* param = nullptr;
            if (bias) {
                const auto j = static_cast<Eigen::Index>(
                    uniform_index(rng, static_cast<std::size_t>(net.layers[l].bias.size())));
                param = &net.layers[l].bias(j);
                analytic = grads.grads.bias[l](j);
            } else {
                const auto j = static_cast<Eigen::Index>(
                    uniform_index(rng, static_cast<std::size_t>(net.layers[l].weight.size())));
                param = net.layers[l].weight.data() + j;
                analytic = grads.grads.weight[l].data()[j];
            }
            const double orig = *param;
            *param = orig + h;
            const double lp = loss(net, x, up);
            *param = orig - h;
            const double lm = loss(net, x, up);
            *param = orig;
            numeric = (lp - lm) / (2 * h);
        }
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-7});
        out.max_rel_error = std::max(out.max_rel_error, std::fabs(analytic - numeric) / denom);
        ++out.probes;
    }
    return out;
}

}  // namespace gradcheck
