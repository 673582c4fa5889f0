// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/fixtures.hpp"

#include <string>
#include <utility>

namespace zodi {

ExactNoiseOracle::ExactNoiseOracle(Tensor z0, NoiseSchedule sched)
    : registered_(true), z0_(std::move(z0)), sched_(std::move(sched)) {}

Tensor ExactNoiseOracle::predict(const Tensor& z, int t, const Conditioning&) const {
    if (!registered_) throw FixtureError("ExactNoiseOracle: no clean sample registered");
    if (t < 1 || t > sched_.T)
        throw FixtureError("ExactNoiseOracle: timestep " + std::to_string(t) +
                           " outside registered range [1, " + std::to_string(sched_.T) + "]");
    check_same_shape(z, z0_, "ExactNoiseOracle");

    const double a = sched_.alpha(t);
    const double s = sched_.sigma(t);
    Tensor eps = Tensor::zeros_like(z);
    for (std::size_t i = 0; i < z.size(); ++i) eps[i] = (z[i] - a * z0_[i]) / s;
    return eps;
}

GaussianPosteriorOracle::GaussianPosteriorOracle(double prior_std, NoiseSchedule sched)
    : prior_var_(prior_std * prior_std), sched_(std::move(sched)) {
    if (prior_std <= 0.0) throw FixtureError("GaussianPosteriorOracle: prior_std must be > 0");
}

Tensor GaussianPosteriorOracle::predict(const Tensor& z, int t, const Conditioning&) const {
    if (t < 1 || t > sched_.T)
        throw FixtureError("GaussianPosteriorOracle: timestep outside [1, T]");

    // z ~ N(0, (a^2 v + s^2) I) under the prior, so E[eps | z] = s z / (a^2 v + s^2).
    const double a = sched_.alpha(t);
    const double s = sched_.sigma(t);
    const double gain = s / (a * a * prior_var_ + s * s);
    Tensor eps = z;
    scale(eps, gain);
    return eps;
}

}  // namespace zodi
