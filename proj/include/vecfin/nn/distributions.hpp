#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecfin/common/rng.hpp"

namespace vecfin::nn {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Softmax with max subtraction.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

class Categorical {
public:
    explicit Categorical(std::span<const double> logits);

    std::size_t size() const { return probs_.size(); }
    const std::vector<double>& probs() const { return probs_; }
    double log_prob(std::size_t action) const;
    double entropy() const;
    /// KL(this || other)
    double kl(const Categorical& other) const;
    std::size_t sample(Rng& rng) const;
    /// Lowest index among ties.
    std::size_t argmax() const;

private:
    std::vector<double> probs_;
    std::vector<double> log_probs_;
};

/// Diagonal Gaussian; log_std is clamped to [kLogStdMin, kLogStdMax].
class DiagGaussian {
public:
    DiagGaussian(std::span<const double> mean, std::span<const double> log_std);

    std::size_t size() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& log_std() const { return log_std_; }
    double log_prob(std::span<const double> x) const;
    double entropy() const;
    /// KL(this || other)
    double kl(const DiagGaussian& other) const;
    /// mean + std * noise
    std::vector<double> rsample(std::span<const double> noise) const;
    std::vector<double> sample(Rng& rng) const;

private:
    std::vector<double> mean_;
    std::vector<double> log_std_;
};

double clamp_log_std(double log_std);

/// log(1 - tanh(u)^2), evaluated without cancellation.
double tanh_log_det(double u);

/// Log-density of a = tanh(u) where u ~ gaussian.
double squashed_log_prob(const DiagGaussian& gaussian, std::span<const double> u);

}  // namespace vecfin::nn
