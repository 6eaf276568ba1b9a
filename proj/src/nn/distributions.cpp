#include "vecfin/nn/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vecfin/common/error.hpp"

namespace vecfin::nn {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) {
        fail(ErrorCode::ShapeMismatch, "softmax of an empty vector");
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) {
        s += std::exp(z - mx);
    }
    const double lse = mx + std::log(s);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - lse;
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        fail(ErrorCode::ShapeMismatch, "softmax of an empty vector");
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        s += out[i];
    }
    for (double& p : out) {
        p /= s;
    }
    return out;
}

Categorical::Categorical(std::span<const double> logits)
    : probs_(softmax(logits)), log_probs_(log_softmax(logits)) {}

double Categorical::log_prob(std::size_t action) const {
    if (action >= log_probs_.size()) {
        fail(ErrorCode::IndexOutOfRange, "categorical action out of range");
    }
    return log_probs_[action];
}

double Categorical::entropy() const {
    double h = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        if (probs_[i] > 0.0) {
            h -= probs_[i] * log_probs_[i];
        }
    }
    return h;
}

double Categorical::kl(const Categorical& other) const {
    if (other.size() != size()) {
        fail(ErrorCode::ShapeMismatch, "categorical KL between different supports");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        if (probs_[i] > 0.0) {
            d += probs_[i] * (log_probs_[i] - other.log_probs_[i]);
        }
    }
    return std::max(d, 0.0);
}

std::size_t Categorical::sample(Rng& rng) const {
    const double u = uniform01(rng);
    double c = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        c += probs_[i];
        if (u < c) {
            return i;
        }
    }
    return probs_.size() - 1;
}

std::size_t Categorical::argmax() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double clamp_log_std(double log_std) { return std::clamp(log_std, kLogStdMin, kLogStdMax); }

DiagGaussian::DiagGaussian(std::span<const double> mean, std::span<const double> log_std)
    : mean_(mean.begin(), mean.end()), log_std_(log_std.begin(), log_std.end()) {
    if (mean.size() != log_std.size()) {
        fail(ErrorCode::ShapeMismatch, "gaussian mean and log_std differ in size");
    }
    for (double& s : log_std_) {
        s = clamp_log_std(s);
    }
}

double DiagGaussian::log_prob(std::span<const double> x) const {
    if (x.size() != size()) {
        fail(ErrorCode::ShapeMismatch, "gaussian sample has the wrong dimension");
    }
    double lp = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double z = (x[i] - mean_[i]) * std::exp(-log_std_[i]);
        lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
    }
    return lp;
}

double DiagGaussian::entropy() const {
    double h = 0.0;
    for (double s : log_std_) {
        h += s + 0.5 + kHalfLog2Pi;
    }
    return h;
}

double DiagGaussian::kl(const DiagGaussian& q) const {
    if (q.size() != size()) {
        fail(ErrorCode::ShapeMismatch, "gaussian KL between different dimensions");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double var_p = std::exp(2.0 * log_std_[i]);
        const double var_q = std::exp(2.0 * q.log_std_[i]);
        const double diff = mean_[i] - q.mean_[i];
        d += q.log_std_[i] - log_std_[i] + (var_p + diff * diff) / (2.0 * var_q) - 0.5;
    }
    return std::max(d, 0.0);
}

std::vector<double> DiagGaussian::rsample(std::span<const double> noise) const {
    if (noise.size() != size()) {
        fail(ErrorCode::ShapeMismatch, "noise has the wrong dimension");
    }
    std::vector<double> x(size());
    for (std::size_t i = 0; i < size(); ++i) {
        x[i] = mean_[i] + std::exp(log_std_[i]) * noise[i];
    }
    return x;
}

std::vector<double> DiagGaussian::sample(Rng& rng) const {
    std::vector<double> noise(size());
    for (double& z : noise) {
        z = standard_normal(rng);
    }
    return rsample(noise);
}

double tanh_log_det(double u) {
    return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

double squashed_log_prob(const DiagGaussian& gaussian, std::span<const double> u) {
    double lp = gaussian.log_prob(u);
    for (double x : u) {
        lp -= tanh_log_det(x);
    }
    return lp;
}

}  // namespace vecfin::nn
