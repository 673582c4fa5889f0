// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace zodi {

enum class ScheduleKind { linear, cosine };

const char* schedule_kind_name(ScheduleKind kind);
ScheduleKind schedule_kind_from_name(const std::string& name);

// Variance-preserving noise schedule: alpha[t]^2 + sigma[t]^2 == 1 for all t,
// alpha[0] == 1, sigma[0] == 0, alpha strictly decreasing. Index 0 is the
// clean signal; index T is (almost) pure noise.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> alphas;  // size T+1
    std::vector<double> sigmas;  // size T+1

    double alpha(int t) const { return alphas[t]; }
    double sigma(int t) const { return sigmas[t]; }
};

// kind == cosine: squared-cosine signal profile (with the usual per-step
// variance clip so alpha stays strictly positive at t == T).
// kind == linear: noise variance linearly spaced from 0 to just under 1.
NoiseSchedule build_schedule(int T, ScheduleKind kind);

}  // namespace zodi
