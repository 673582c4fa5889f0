// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "zodi/losses.hpp"
#include "zodi/segmodel.hpp"
#include "zodi/transfer.hpp"

namespace zodi {

// Spatial transform shared by an image pair and its map within one step.
struct AugPlan {
    bool flip = false;
    int crop_y = 0, crop_x = 0;
    int crop_h = 0, crop_w = 0;  // 0 means no crop
};

// Per-channel affine photometric jitter, applied per image (not shared).
struct JitterParams {
    std::array<double, 3> scale = {1.0, 1.0, 1.0};
    std::array<double, 3> shift = {0.0, 0.0, 0.0};
};

Tensor apply_spatial(const Tensor& img, const AugPlan& plan);
ClassMap apply_spatial(const ClassMap& map, const AugPlan& plan);
Tensor apply_jitter(const Tensor& img, const JitterParams& jit);  // clamps to [-1, 1]

// Emitted once per training pair per step; carries everything needed to
// reproduce the augmented inputs, which is how tests verify that the spatial
// transform really is shared within the pair.
struct AugObservation {
    int epoch = 0;
    std::size_t pair_index = 0;
    AugPlan plan;
    JitterParams jit_source, jit_generated;
};

struct TrainConfig {
    int epochs = 40;
    int batch_size = 4;
    double lr0 = 1e-2;
    double poly_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lambda = 0.1;
    bool flip = true;
    bool color_jitter = true;
    int crop_h = 24, crop_w = 48;  // 0 disables cropping
    std::uint64_t seed = 1;
    std::function<void(const AugObservation&)> observer;  // optional instrumentation

    void validate() const;
};

struct TrainResult {
    std::vector<LossBreakdown> history;  // per-epoch means
};

// Momentum SGD with weight decay and polynomial LR decay over shuffled
// mini-batches of (source, generated, map) triples. The spatial augmentation
// is drawn once per pair and applied to all three members; photometric jitter
// is drawn independently per image.
TrainResult train_zodi(SegBackbone& m, const std::vector<TransferredPair>& pairs,
                       const TrainConfig& cfg);

// The source-only baseline is train_zodi on degenerate pairs (generated ==
// source) with lambda forced to 0, by delegation, so the two objectives
// coincide exactly where they should.
TrainResult train_source_only(SegBackbone& m, const std::vector<SceneSample>& samples,
                              const TrainConfig& cfg);

}  // namespace zodi
