// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace zodi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCosineOffset = 0.008;
constexpr double kMaxStepVariance = 0.999;
constexpr double kLinearFinalSignal = 1e-4;  // abar at t == T for the linear kind

double squared_cosine(double frac) {
    const double c = std::cos((frac + kCosineOffset) / (1.0 + kCosineOffset) * kPi / 2.0);
    return c * c;
}

}  // namespace

const char* schedule_kind_name(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear") return ScheduleKind::linear;
    if (name == "cosine") return ScheduleKind::cosine;
    throw std::invalid_argument("unknown schedule kind: " + name);
}

NoiseSchedule build_schedule(int T, ScheduleKind kind) {
    if (T < 1) throw std::invalid_argument("build_schedule: T must be >= 1");

    std::vector<double> abar(T + 1);
    abar[0] = 1.0;
    if (kind == ScheduleKind::cosine) {
        double prev_profile = squared_cosine(0.0);
        for (int t = 1; t <= T; ++t) {
            const double profile = squared_cosine(static_cast<double>(t) / T);
            const double step_var = std::min(1.0 - profile / prev_profile, kMaxStepVariance);
            abar[t] = abar[t - 1] * (1.0 - step_var);
            prev_profile = profile;
        }
    } else {
        for (int t = 1; t <= T; ++t)
            abar[t] = 1.0 - (static_cast<double>(t) / T) * (1.0 - kLinearFinalSignal);
    }

    NoiseSchedule sched;
    sched.T = T;
    sched.alphas.resize(T + 1);
    sched.sigmas.resize(T + 1);
    for (int t = 0; t <= T; ++t) {
        sched.alphas[t] = std::sqrt(abar[t]);
        sched.sigmas[t] = std::sqrt(1.0 - abar[t]);
    }
    sched.sigmas[0] = 0.0;  // exact by definition
    sched.alphas[0] = 1.0;
    return sched;
}

}  // namespace zodi
