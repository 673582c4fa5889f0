// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "zodi/rng.hpp"
#include "zodi/tensor.hpp"

// Minimal layer set with hand-written backward passes. Layers are metadata
// plus offsets into a flat parameter vector owned by the model; forward can
// record intermediates on a caller-owned tape, which keeps inference pure and
// concurrently callable on frozen parameters.

namespace zodi::nn {

struct Tape {
    std::vector<Tensor> tensors;
    std::vector<std::vector<double>> vecs;

    void push(Tensor t) { tensors.push_back(std::move(t)); }
    void push_vec(std::vector<double> v) { vecs.push_back(std::move(v)); }
    Tensor pop();
    std::vector<double> pop_vec();
    void clear();
};

struct Conv2d {
    int in_c = 0, out_c = 0, ksize = 3, stride = 1, pad = 1;
    int w_off = 0, b_off = 0;

    int param_count() const { return out_c * in_c * ksize * ksize + out_c; }
    int out_dim(int d) const { return (d + 2 * pad - ksize) / stride + 1; }
    void init(Rng& rng, double* p) const;

    Tensor forward(const Tensor& x, const double* p, Tape* tape) const;
    // Pops the cached input; accumulates weight/bias grads into g. Returns the
    // input gradient (skipped when need_gx is false).
    Tensor backward(const Tensor& gy, const double* p, double* g, Tape& tape,
                    bool need_gx = true) const;
};

struct Dense {
    int in_dim = 0, out_dim = 0;
    int w_off = 0, b_off = 0;

    int param_count() const { return in_dim * out_dim + out_dim; }
    void init(Rng& rng, double* p) const;

    std::vector<double> forward(const std::vector<double>& x, const double* p, Tape* tape) const;
    std::vector<double> backward(const std::vector<double>& gy, const double* p, double* g,
                                 Tape& tape) const;
};

// x * sigmoid(x)
Tensor silu(const Tensor& x, Tape* tape);
Tensor silu_backward(const Tensor& gy, Tape& tape);

Tensor nearest_up2(const Tensor& x);
Tensor nearest_up2_backward(const Tensor& gy);

// Half-pixel-centered bilinear, factor 2, edge-clamped.
Tensor bilinear_up2(const Tensor& x);
Tensor bilinear_up2_backward(const Tensor& gy);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& gy, int c_a, Tensor& ga, Tensor& gb);

// y[c, :, :] = x[c, :, :] + v[c]
Tensor add_channel_bias(const Tensor& x, const std::vector<double>& v);
std::vector<double> channel_bias_backward(const Tensor& gy);

// Feature-wise affine modulation: y[c] = x[c] * (1 + gb[c]) + gb[C + c],
// where gb packs per-channel scales then shifts (2C values). The identity
// lives at gb == 0, which keeps freshly initialised conditioning branches
// from disturbing the main path.
Tensor film(const Tensor& x, const std::vector<double>& gb, Tape* tape);
// Pops the cached scale vector and input; returns the input gradient and
// writes the 2C-element gb gradient.
Tensor film_backward(const Tensor& gy, Tape& tape, std::vector<double>& g_gb);

std::vector<double> global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const std::vector<double>& gfeat, int h, int w);

}  // namespace zodi::nn
