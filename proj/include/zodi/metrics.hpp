// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "zodi/classmap.hpp"
#include "zodi/scene.hpp"
#include "zodi/segmodel.hpp"

namespace zodi {

// Mean intersection-over-union from one global confusion matrix accumulated
// over every pixel of every pair. Classes absent from both prediction and
// ground truth are left out of the mean.
double miou(const std::vector<ClassMap>& preds, const std::vector<ClassMap>& gts,
            int num_classes);

// Convenience: predict each sample and score against its layout.
double evaluate_miou(const SegBackbone& m, const std::vector<SceneSample>& samples);

}  // namespace zodi
