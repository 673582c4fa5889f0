// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "zodi/classmap.hpp"
#include "zodi/segmodel.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

struct LossBreakdown {
    double task = 0.0;
    double sim = 0.0;
    double total = 0.0;
    double lambda = 0.0;
};

// 1 - cosine(f1, f2), in [0, 2]. Throws DegenerateInputError on a zero vector
// because the cosine is undefined there.
double sim_loss(const std::vector<double>& f1, const std::vector<double>& f2);

// Pixel-averaged categorical cross-entropy with a numerically stable
// log-softmax.
double cross_entropy(const Tensor& logits, const ClassMap& y);

// CE(H(F(I)), y) + CE(H(F(I')), y): both images scored against the original
// map, which is what lets the transferred image reuse the source annotation.
double task_loss(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                 const ClassMap& y);

// total = lambda * sim + task
LossBreakdown zodi_loss(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                        const ClassMap& y, double lambda);

// Same value as zodi_loss; additionally accumulates d(total)/d(params) into
// grad. With lambda == 0 the feature branch contributes no gradient.
LossBreakdown zodi_loss_grad(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                             const ClassMap& y, double lambda, double* grad);

}  // namespace zodi
