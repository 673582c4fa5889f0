// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "zodi/conditioning.hpp"
#include "zodi/errors.hpp"
#include "zodi/schedule.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// Analytic fixture: registered around a known clean sample, it returns the
// exact eps satisfying z = alpha_t * z0 + sigma_t * eps. Makes inversion and
// reconstruction properties exactly checkable.
class ExactNoiseOracle final : public NoisePredictor {
public:
    ExactNoiseOracle() = default;  // unregistered; any query throws
    ExactNoiseOracle(Tensor z0, NoiseSchedule sched);

    Tensor predict(const Tensor& z, int t, const Conditioning& cond) const override;

private:
    bool registered_ = false;
    Tensor z0_;
    NoiseSchedule sched_;
};

// Posterior-mean noise predictor for the prior z0 ~ N(0, prior_std^2 I).
// Models a realistic imperfect denoiser with a closed form.
class GaussianPosteriorOracle final : public NoisePredictor {
public:
    GaussianPosteriorOracle(double prior_std, NoiseSchedule sched);

    Tensor predict(const Tensor& z, int t, const Conditioning& cond) const override;

private:
    double prior_var_;
    NoiseSchedule sched_;
};

}  // namespace zodi
