// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "zodi/conditioning.hpp"
#include "zodi/rng.hpp"
#include "zodi/schedule.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// z_t = alpha_t * z0 + sigma_t * eps
Tensor forward_noising(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched);

// Deterministic update: reconstruct z0hat = (z_t - sigma_t * eps_pred) / alpha_t,
// then re-noise to t_prev with the same predicted noise. Requires t_prev < t.
Tensor reverse_step(const Tensor& z_t, const Tensor& eps_pred, int t, int t_prev,
                    const NoiseSchedule& sched);

// The timestep trajectory denoise_from walks: `steps` uniformly spaced values
// from k down to 0 inclusive, strictly decreasing. steps is clamped to k.
std::vector<int> reverse_timesteps(int k, int steps);

// Walk reverse_step from timestep k down to 0, querying the predictor at each
// intermediate timestep. k == 0 returns the input unchanged.
Tensor denoise_from(const Tensor& z_k, int k, const NoisePredictor& denoiser,
                    const Conditioning& cond, const NoiseSchedule& sched, int steps);

// Mean squared error between eps and the prediction at a fixed (t, eps) pair.
// Deterministic; this is what the finite-difference gradient checks probe.
double denoiser_loss_at(const NoisePredictor& denoiser, const Tensor& z0, const Conditioning& cond,
                        const NoiseSchedule& sched, int t, const Tensor& eps);

// Draws t ~ Uniform{1..T} and eps ~ N(0, I) from rng, then scores the pair.
double denoiser_loss(const NoisePredictor& denoiser, const Tensor& z0, const Conditioning& cond,
                     const NoiseSchedule& sched, Rng& rng);

}  // namespace zodi
