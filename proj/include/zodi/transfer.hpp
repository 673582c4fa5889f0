// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zodi/denoiser.hpp"
#include "zodi/scene.hpp"
#include "zodi/schedule.hpp"

namespace zodi {

// zodi: inversion + layout; no_si: fresh noise + layout; inst: inversion,
// no layout; sdedit: fresh noise, no layout.
enum class Variant { zodi, sdedit, inst, no_si };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Per-domain transfer strength defaults; day has none (it is the source).
double default_strength(Domain target);

// k = floor(T*S), with a tiny epsilon so decimal strengths stored in binary
// floating point (10*0.7 == 6.999...) still floor to the intended integer.
int strength_to_k(int T, double S);

struct TransferConfig {
    Domain target = Domain::night;
    double strength = 0.9;
    Variant variant = Variant::zodi;
    int steps = 0;  // reverse-step count; 0 means every step from k down
    // Eq-level choice of which domain label conditions the inversion noise
    // prediction; generation always conditions on the target.
    bool invert_condition_on_target = true;

    void validate() const;
};

struct TransferredPair {
    SceneSample source;
    Tensor generated;  // same shape as source.image, clamped to [-1, 1]
    ClassMap layout;   // byte-identical copy of source.layout
    TransferConfig config;
};

// Noise the clean signal to step k, predict the noise the model believes is
// in it, then rebuild z_k from that prediction. The rebuilt point keeps the
// model-consistent part of the original content.
Tensor stochastic_inversion(const Tensor& z0, int k, const NoisePredictor& den,
                            const Conditioning& cond, const NoiseSchedule& sched, Rng& rng);

// Variant dispatch over any noise predictor; no trained-model gate, which is
// what lets analytic fixtures drive the full path in tests.
TransferredPair transfer_image_with(const SceneSample& sample, const TransferConfig& cfg,
                                    const NoisePredictor& den, const NoiseSchedule& sched,
                                    Rng& rng);

// Production entry: refuses untrained denoisers.
TransferredPair transfer_image(const SceneSample& sample, const TransferConfig& cfg,
                               const Denoiser& den, const NoiseSchedule& sched, Rng& rng);

// One-to-one, order-preserving. Pair i draws from a stream derived from
// (master_seed, sample_i.seed), so results do not depend on processing order.
std::vector<TransferredPair> transfer_dataset(const std::vector<SceneSample>& samples,
                                              const TransferConfig& cfg, const Denoiser& den,
                                              const NoiseSchedule& sched,
                                              std::uint64_t master_seed);

std::vector<TransferredPair> transfer_dataset_with(const std::vector<SceneSample>& samples,
                                                   const TransferConfig& cfg,
                                                   const NoisePredictor& den,
                                                   const NoiseSchedule& sched,
                                                   std::uint64_t master_seed);

}  // namespace zodi
