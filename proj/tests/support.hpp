// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "zodi/denoiser.hpp"
#include "zodi/scene.hpp"
#include "zodi/schedule.hpp"

namespace zoditest {

inline const zodi::NoiseSchedule& sched10() {
    static const zodi::NoiseSchedule s = zodi::build_schedule(10, zodi::ScheduleKind::cosine);
    return s;
}

// Small denoiser trained just enough to behave like a model rather than a
// random map. Built once per test binary.
inline const zodi::Denoiser& pretrained_tiny_denoiser() {
    static const zodi::Denoiser model = [] {
        zodi::DenoiserConfig cfg;
        cfg.base_channels = 8;
        cfg.emb_dim = 8;
        cfg.t_steps = 10;
        zodi::Denoiser d(cfg, 404);
        std::vector<zodi::SceneSample> corpus;
        for (std::uint64_t s = 0; s < 12; ++s)
            corpus.push_back(zodi::render_seed(700 + s, static_cast<zodi::Domain>(s % zodi::kNumDomains)));
        zodi::PretrainConfig pc;
        pc.epochs = 15;
        pc.batch_size = 4;
        pc.lr = 2e-3;
        pretrain_denoiser(d, corpus, sched10(), pc);
        return d;
    }();
    return model;
}

}  // namespace zoditest
