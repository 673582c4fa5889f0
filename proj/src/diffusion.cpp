// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/diffusion.hpp"

#include <stdexcept>
#include <string>

namespace zodi {

namespace {

void check_timestep(int t, const NoiseSchedule& sched, const char* where) {
    if (t < 0 || t > sched.T)
        throw std::invalid_argument(std::string(where) + ": timestep " + std::to_string(t) +
                                    " outside [0, " + std::to_string(sched.T) + "]");
}

}  // namespace

Tensor forward_noising(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    check_timestep(t, sched, "forward_noising");
    check_same_shape(z0, eps, "forward_noising");

    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    Tensor out = Tensor::zeros_like(z0);
    const double* z = z0.data();
    const double* e = eps.data();
    double* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = a * z[i] + s * e[i];
    return out;
}

Tensor reverse_step(const Tensor& z_t, const Tensor& eps_pred, int t, int t_prev,
                    const NoiseSchedule& sched) {
    check_timestep(t, sched, "reverse_step");
    check_timestep(t_prev, sched, "reverse_step");
    if (t_prev >= t) throw std::invalid_argument("reverse_step: t_prev must be < t");
    check_same_shape(z_t, eps_pred, "reverse_step");

    const double a_t = sched.alpha(t);
    const double s_t = sched.sigma(t);
    const double a_p = sched.alpha(t_prev);
    const double s_p = sched.sigma(t_prev);
    Tensor out = Tensor::zeros_like(z_t);
    const double* z = z_t.data();
    const double* e = eps_pred.data();
    double* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double z0_hat = (z[i] - s_t * e[i]) / a_t;
        o[i] = a_p * z0_hat + s_p * e[i];
    }
    return out;
}

std::vector<int> reverse_timesteps(int k, int steps) {
    if (k < 0) throw std::invalid_argument("reverse_timesteps: k must be >= 0");
    if (steps < 1) throw std::invalid_argument("reverse_timesteps: steps must be >= 1");
    if (k == 0) return {0};

    const int n = std::min(steps, k);
    std::vector<int> ts(n + 1);
    for (int i = 0; i <= n; ++i) {
        // round(k * (n - i) / n); exact integer arithmetic keeps this strictly
        // decreasing for n <= k
        ts[i] = static_cast<int>((static_cast<long long>(k) * (n - i) + n / 2) / n);
    }
    ts.front() = k;
    ts.back() = 0;
    return ts;
}

Tensor denoise_from(const Tensor& z_k, int k, const NoisePredictor& denoiser,
                    const Conditioning& cond, const NoiseSchedule& sched, int steps) {
    check_timestep(k, sched, "denoise_from");
    if (k == 0) return z_k;
    if (steps < 1) throw std::invalid_argument("denoise_from: steps must be >= 1");

    const std::vector<int> ts = reverse_timesteps(k, steps);
    Tensor z = z_k;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const Tensor eps_pred = denoiser.predict(z, ts[i], cond);
        z = reverse_step(z, eps_pred, ts[i], ts[i + 1], sched);
    }
    return z;
}

double denoiser_loss_at(const NoisePredictor& denoiser, const Tensor& z0, const Conditioning& cond,
                        const NoiseSchedule& sched, int t, const Tensor& eps) {
    if (t < 1 || t > sched.T)
        throw std::invalid_argument("denoiser_loss_at: t outside [1, T]");
    check_same_shape(z0, eps, "denoiser_loss_at");

    const Tensor z_t = forward_noising(z0, t, eps, sched);
    const Tensor pred = denoiser.predict(z_t, t, cond);
    check_same_shape(pred, eps, "denoiser_loss_at");

    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = eps[i] - pred[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

double denoiser_loss(const NoisePredictor& denoiser, const Tensor& z0, const Conditioning& cond,
                     const NoiseSchedule& sched, Rng& rng) {
    const int t = rng.uniform_int(1, sched.T);
    Tensor eps = Tensor::zeros_like(z0);
    fill_normal(eps, rng);
    return denoiser_loss_at(denoiser, z0, cond, sched, t, eps);
}

}  // namespace zodi
