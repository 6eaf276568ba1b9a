#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "support/helpers.hpp"
#include "support/gradcheck.hpp"
#include "vecfin/common/rng.hpp"
#include "vecfin/nn/adam.hpp"
#include "vecfin/nn/checkpoint.hpp"
#include "vecfin/nn/distributions.hpp"
#include "vecfin/nn/mlp.hpp"

using namespace vecfin;
using namespace vecfin::nn;

TEST_SUITE("nn") {

TEST_CASE("forward: zero net, identity layer, determinism") {
    std::vector<std::size_t> sizes{3, 4, 2};
    Mlp net = init_params(sizes, Activation::relu, 1);
    for (auto b : net.parameter_blocks()) std::fill(b.begin(), b.end(), 0.0);
    Matrix x = Matrix::Random(5, 3);
    CHECK(forward(net, x).isZero());

    Mlp id;
    id.layers.push_back({Matrix::Identity(3, 3), RowVector::Zero(3), Activation::identity});
    CHECK(forward(id, x) == x);

    Mlp a = init_params(sizes, Activation::tanh, 42);
    CHECK(forward(a, x) == forward(init_params(sizes, Activation::tanh, 42), x));
    CHECK_ERROR_CODE(forward(a, Matrix::Zero(2, 4)), ErrorCode::ShapeMismatch);
}

TEST_CASE("backward: zero upstream and hand derivative") {
    std::vector<std::size_t> sizes{2, 3, 1};
    Mlp net = init_params(sizes, Activation::relu, 3);
    ForwardCache cache;
    Matrix x = Matrix::Random(4, 2);
    forward(net, x, &cache);
    const auto res = backward(net, cache, Matrix::Zero(4, 1));
    CHECK(res.grads.squared_norm() == 0.0);

    Mlp lin;
    lin.layers.push_back({Matrix::Constant(1, 1, 0.7), RowVector::Zero(1), Activation::identity});
    ForwardCache c2;
    forward(lin, Matrix::Constant(1, 1, 3.0), &c2);
    const auto g = backward(lin, c2, Matrix::Constant(1, 1, 1.0));
    CHECK(g.grads.weight[0](0, 0) == 3.0);
    CHECK(g.grads.bias[0](0) == 1.0);
    CHECK(g.input_grad(0, 0) == 0.7);
    CHECK_ERROR_CODE(backward(lin, c2, Matrix::Zero(2, 1)), ErrorCode::ShapeMismatch);
}

TEST_CASE("backward matches central differences on random nets") {
    Rng rng = make_rng(99, 0);
    const auto result = gradcheck::run(rng, 20);
    CHECK(result.probes == 20);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("init_params: seeds and bounds") {
    std::vector<std::size_t> sizes{10, 32, 4};
    CHECK(init_params(sizes, Activation::relu, 5) == init_params(sizes, Activation::relu, 5));
    CHECK(!(init_params(sizes, Activation::relu, 5) == init_params(sizes, Activation::relu, 6)));
    for (auto act : {Activation::relu, Activation::tanh}) {
        const Mlp net = init_params(sizes, act, 8);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const auto& layer = net.layers[l];
            const double bound = init_bound(static_cast<std::size_t>(layer.weight.cols()),
                                            static_cast<std::size_t>(layer.weight.rows()),
                                            l + 1 < net.layers.size() ? act : Activation::identity);
            CHECK(layer.weight.cwiseAbs().maxCoeff() <= bound);
            CHECK(layer.bias.isZero());
        }
    }
    CHECK(init_bound(6, 1, Activation::relu) == doctest::Approx(1.0));
    CHECK(init_bound(3, 3, Activation::tanh) == doctest::Approx(1.0));
}

TEST_CASE("adam: zero gradient, first step, descent direction") {
    std::vector<double> p{1.0, -2.0};
    std::vector<double> g{0.0, 0.0};
    AdamState st;
    st.config.lr = 0.1;
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g};
    adam_step(ps, gs, st);
    CHECK(p == std::vector<double>{1.0, -2.0});
    CHECK(st.step == 1);

    AdamState st2;
    st2.config.lr = 0.01;
    std::vector<double> q{0.0};
    std::vector<double> gq{0.5};
    std::vector<std::span<double>> qs{q};
    std::vector<std::span<const double>> gqs{gq};
    adam_step(qs, gqs, st2);
    // m_hat = g, v_hat = g^2 after one step.
    CHECK(q[0] == doctest::Approx(-0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    for (int i = 0; i < 200; ++i) adam_step(qs, gqs, st2);
    CHECK(q[0] < -1.0);

    std::vector<double> bad{std::nan("")};
    std::vector<std::span<const double>> bads{bad};
    CHECK_ERROR_CODE(adam_step(qs, bads, st2), ErrorCode::NonFiniteGradient);
}

TEST_CASE("categorical head") {
    std::vector<double> eq{0.3, 0.3, 0.3, 0.3};
    Categorical c(eq);
    for (double p : c.probs()) CHECK(p == doctest::Approx(0.25));
    CHECK(c.entropy() == doctest::Approx(std::log(4.0)));
    CHECK(c.kl(c) == 0.0);

    std::vector<double> la{std::log(0.5), std::log(0.5)};
    std::vector<double> lb{std::log(0.9), std::log(0.1)};
    const double oracle = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    CHECK(Categorical(la).kl(Categorical(lb)) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(0.5108).epsilon(1e-4));

    std::vector<double> logits{1000.0, 999.0, -5.0};
    const auto p = softmax(logits);
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    std::vector<double> shifted{1003.0, 1002.0, -2.0};
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
    std::vector<double> tie{1, 1, 0};
    CHECK(Categorical(tie).argmax() == 0);
}

TEST_CASE("categorical sampling frequencies") {
    std::vector<double> logits{std::log(0.2), std::log(0.3), std::log(0.5)};
    Categorical c(logits);
    Rng rng = make_rng(1, 1);
    std::vector<int> counts(3, 0);
    const int n = 20000;
    for (int i = 0; i < n; ++i) counts[c.sample(rng)]++;
    for (std::size_t k = 0; k < 3; ++k) {
        const double p = c.probs()[k];
        CHECK(std::fabs(counts[k] - n * p) < 4 * std::sqrt(n * p * (1 - p)));
    }
}

TEST_CASE("gaussian head") {
    std::vector<double> zero{0.0}, one{1.0};
    DiagGaussian a(zero, zero), b(one, zero);
    CHECK(a.kl(a) == 0.0);
    CHECK(a.kl(b) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(a.log_prob(zero) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
    std::vector<double> big{10.0}, small{-10.0};
    CHECK(DiagGaussian(zero, big).log_std()[0] == kLogStdMax);
    CHECK(DiagGaussian(zero, small).log_std()[0] == kLogStdMin);
    std::vector<double> mu{0.3, -0.2}, ls{-0.5, 0.1}, z{1.5, -0.7};
    DiagGaussian g(mu, ls);
    const auto x = g.rsample(z);
    CHECK(x[0] == doctest::Approx(0.3 + std::exp(-0.5) * 1.5));
    std::vector<double> mu2{0.4, -0.2};
    const auto x2 = DiagGaussian(mu2, ls).rsample(z);
    CHECK(x2[0] - x[0] == doctest::Approx(0.1));
    CHECK(x2[1] == x[1]);
    // KL non-negativity on random pairs.
    Rng rng = make_rng(2, 2);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> m1{uniform(rng, -1, 1)}, s1{uniform(rng, -2, 1)};
        std::vector<double> m2{uniform(rng, -1, 1)}, s2{uniform(rng, -2, 1)};
        CHECK(DiagGaussian(m1, s1).kl(DiagGaussian(m2, s2)) >= 0.0);
    }
}

TEST_CASE("tanh squashing log-det") {
    for (double u : {-30.0, -3.0, -0.5, 0.0, 0.7, 4.0}) {
        const double direct = std::log(1.0 - std::tanh(u) * std::tanh(u));
        if (std::fabs(u) < 5) {
            CHECK(tanh_log_det(u) == doctest::Approx(direct).epsilon(1e-10));
        }
        CHECK(std::isfinite(tanh_log_det(u)));
    }
    std::vector<double> mu{0.1}, ls{-0.3}, u{0.4};
    DiagGaussian g(mu, ls);
    CHECK(squashed_log_prob(g, u) == doctest::Approx(g.log_prob(u) - tanh_log_det(0.4)).epsilon(1e-12));
}

TEST_CASE("soft_update and clipping") {
    std::vector<std::size_t> sizes{3, 5, 2};
    Mlp a = init_params(sizes, Activation::relu, 1);
    const Mlp b = init_params(sizes, Activation::relu, 2);
    Mlp keep = a;
    soft_update(keep, b, 0.0);
    CHECK(keep == a);
    soft_update(a, b, 1.0);
    CHECK(a == b);

    Gradients g = Gradients::zeros_like(b);
    g.weight[0].setConstant(3.0);
    Gradients* gp[] = {&g};
    const double before = clip_global_norm(gp, 1.0);
    CHECK(before == doctest::Approx(std::sqrt(15.0 * 9.0)));
    CHECK(std::sqrt(g.squared_norm()) == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round trip is bit-exact") {
    std::vector<std::size_t> sizes{7, 16, 16, 3};
    const Mlp net = init_params(sizes, Activation::tanh, 77);
    std::stringstream buf;
    write_mlp(buf, net);
    const std::string bytes = buf.str();
    const Mlp back = read_mlp(buf);
    CHECK(back == net);
    std::stringstream again;
    write_mlp(again, back);
    CHECK(again.str() == bytes);
}

}  // TEST_SUITE
