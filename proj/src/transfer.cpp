// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/transfer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "zodi/diffusion.hpp"
#include "zodi/errors.hpp"

namespace zodi {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::zodi: return "zodi";
        case Variant::sdedit: return "sdedit";
        case Variant::inst: return "inst";
        case Variant::no_si: return "no_si";
    }
    throw std::invalid_argument("variant_name: bad variant value");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::zodi, Variant::sdedit, Variant::inst, Variant::no_si})
        if (name == variant_name(v)) return v;
    throw std::invalid_argument("unknown variant name: " + name);
}

double default_strength(Domain target) {
    switch (target) {
        case Domain::night: return 0.9;
        case Domain::snow: return 0.65;
        case Domain::rain: return 0.65;
        case Domain::fog: return 0.6;
        case Domain::game: return 0.6;
        case Domain::day:
            throw std::invalid_argument("default_strength: day is the source domain");
    }
    throw std::invalid_argument("default_strength: bad domain value");
}

int strength_to_k(int T, double S) {
    if (T < 1) throw std::invalid_argument("strength_to_k: T must be >= 1");
    if (S < 0.0 || S > 1.0)
        throw std::invalid_argument("strength_to_k: strength must lie in [0, 1]");
    return static_cast<int>(std::floor(static_cast<double>(T) * S + 1e-9));
}

void TransferConfig::validate() const {
    if (strength < 0.0 || strength > 1.0)
        throw std::invalid_argument("TransferConfig: strength must lie in [0, 1]");
    if (steps < 0) throw std::invalid_argument("TransferConfig: steps must be >= 0");
}

Tensor stochastic_inversion(const Tensor& z0, int k, const NoisePredictor& den,
                            const Conditioning& cond, const NoiseSchedule& sched, Rng& rng) {
    if (k < 1 || k > sched.T)
        throw std::invalid_argument("stochastic_inversion: k must lie in [1, T]");

    Tensor eps = Tensor::zeros_like(z0);
    fill_normal(eps, rng);
    Tensor z_k = forward_noising(z0, k, eps, sched);
    Tensor eps_k = den.predict(z_k, k, cond);
    return forward_noising(z0, k, eps_k, sched);
}

TransferredPair transfer_image_with(const SceneSample& sample, const TransferConfig& cfg,
                                    const NoisePredictor& den, const NoiseSchedule& sched,
                                    Rng& rng) {
    cfg.validate();
    if (sample.domain == cfg.target)
        throw std::invalid_argument("transfer_image: sample is already in the target domain");

    TransferredPair out;
    out.source = sample;
    out.layout = sample.layout;
    out.config = cfg;

    const int k = strength_to_k(sched.T, cfg.strength);
    if (k == 0) {
        out.generated = sample.image;
        return out;
    }

    const bool layout_on = cfg.variant == Variant::zodi || cfg.variant == Variant::no_si;
    const bool invert = cfg.variant == Variant::zodi || cfg.variant == Variant::inst;

    Conditioning gen_cond;
    gen_cond.domain_id = static_cast<int>(cfg.target);
    gen_cond.layout = sample.layout;
    gen_cond.use_layout = layout_on;

    Tensor z_k;
    if (invert) {
        Conditioning inv_cond = gen_cond;
        if (!cfg.invert_condition_on_target) inv_cond.domain_id = static_cast<int>(sample.domain);
        z_k = stochastic_inversion(sample.image, k, den, inv_cond, sched, rng);
    } else {
        Tensor eps = Tensor::zeros_like(sample.image);
        fill_normal(eps, rng);
        z_k = forward_noising(sample.image, k, eps, sched);
    }

    const int steps = cfg.steps == 0 ? k : cfg.steps;
    out.generated = denoise_from(z_k, k, den, gen_cond, sched, steps);
    clamp(out.generated, -1.0, 1.0);
    return out;
}

TransferredPair transfer_image(const SceneSample& sample, const TransferConfig& cfg,
                               const Denoiser& den, const NoiseSchedule& sched, Rng& rng) {
    if (!den.is_trained())
        throw UnusableModelError("transfer_image: denoiser has not been pretrained");
    return transfer_image_with(sample, cfg, den, sched, rng);
}

std::vector<TransferredPair> transfer_dataset_with(const std::vector<SceneSample>& samples,
                                                   const TransferConfig& cfg,
                                                   const NoisePredictor& den,
                                                   const NoiseSchedule& sched,
                                                   std::uint64_t master_seed) {
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].image.channels() != samples[0].image.channels() ||
            samples[i].image.height() != samples[0].image.height() ||
            samples[i].image.width() != samples[0].image.width())
            throw std::invalid_argument("transfer_dataset: samples must share one spatial shape");

    std::vector<TransferredPair> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Rng rng(derive_seed(master_seed, samples[i].seed));
        try {
            out.push_back(transfer_image_with(samples[i], cfg, den, sched, rng));
        } catch (const std::exception& e) {
            throw std::runtime_error("transfer_dataset: item " + std::to_string(i) + " (seed " +
                                     std::to_string(samples[i].seed) + ") failed: " + e.what());
        }
    }
    return out;
}

std::vector<TransferredPair> transfer_dataset(const std::vector<SceneSample>& samples,
                                              const TransferConfig& cfg, const Denoiser& den,
                                              const NoiseSchedule& sched,
                                              std::uint64_t master_seed) {
    if (!den.is_trained())
        throw UnusableModelError("transfer_dataset: denoiser has not been pretrained");
    return transfer_dataset_with(samples, cfg, den, sched, master_seed);
}

}  // namespace zodi
