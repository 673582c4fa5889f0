// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "zodi/classmap.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// What the noise predictor is conditioned on: a domain identity (the prompt
// analog) and the segmentation layout. `use_layout=false` feeds zeroed layout
// channels instead, which is how the SDEdit/InST transfer variants run.
struct Conditioning {
    int domain_id = 0;
    ClassMap layout;
    bool use_layout = true;
};

// Anything that can predict the noise content of a latent at timestep t.
// Implemented by the trainable denoiser and by the analytic test oracles.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Tensor predict(const Tensor& z, int t, const Conditioning& cond) const = 0;
};

}  // namespace zodi
