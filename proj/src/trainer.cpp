// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace zodi {

Tensor apply_spatial(const Tensor& img, const AugPlan& plan) {
    const int h = plan.crop_h > 0 ? plan.crop_h : img.height();
    const int w = plan.crop_w > 0 ? plan.crop_w : img.width();
    if (plan.crop_y < 0 || plan.crop_x < 0 || plan.crop_y + h > img.height() ||
        plan.crop_x + w > img.width())
        throw std::invalid_argument("apply_spatial: crop window out of bounds");
    Tensor out(img.channels(), h, w);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int sx = plan.flip ? (plan.crop_x + w - 1 - x) : (plan.crop_x + x);
                out.at(c, y, x) = img.at(c, plan.crop_y + y, sx);
            }
    return out;
}

ClassMap apply_spatial(const ClassMap& map, const AugPlan& plan) {
    const int h = plan.crop_h > 0 ? plan.crop_h : map.h;
    const int w = plan.crop_w > 0 ? plan.crop_w : map.w;
    if (plan.crop_y < 0 || plan.crop_x < 0 || plan.crop_y + h > map.h || plan.crop_x + w > map.w)
        throw std::invalid_argument("apply_spatial: crop window out of bounds");
    ClassMap out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sx = plan.flip ? (plan.crop_x + w - 1 - x) : (plan.crop_x + x);
            out.at(y, x) = map.at(plan.crop_y + y, sx);
        }
    return out;
}

Tensor apply_jitter(const Tensor& img, const JitterParams& jit) {
    if (img.channels() > 3)
        throw std::invalid_argument("apply_jitter: more channels than jitter parameters");
    Tensor out = img;
    for (int c = 0; c < img.channels(); ++c) {
        const double s = jit.scale[static_cast<std::size_t>(c)];
        const double b = jit.shift[static_cast<std::size_t>(c)];
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                out.at(c, y, x) = std::clamp(img.at(c, y, x) * s + b, -1.0, 1.0);
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(lr0 > 0.0)) throw std::invalid_argument("TrainConfig: lr0 must be positive");
    if (poly_power < 0.0) throw std::invalid_argument("TrainConfig: poly_power must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if ((crop_h == 0) != (crop_w == 0))
        throw std::invalid_argument("TrainConfig: crop dims must both be set or both be 0");
    if (crop_h < 0 || crop_w < 0 || crop_h % 4 != 0 || crop_w % 4 != 0)
        throw std::invalid_argument("TrainConfig: crop dims must be nonnegative multiples of 4");
}

namespace {

AugPlan draw_plan(Rng& rng, const TrainConfig& cfg, int h, int w) {
    AugPlan plan;
    if (cfg.flip) plan.flip = rng.uniform() < 0.5;
    if (cfg.crop_h > 0) {
        if (cfg.crop_h > h || cfg.crop_w > w)
            throw std::invalid_argument("train: crop larger than the image");
        if (cfg.crop_h < h || cfg.crop_w < w) {
            plan.crop_h = cfg.crop_h;
            plan.crop_w = cfg.crop_w;
            plan.crop_y = rng.uniform_int(0, h - cfg.crop_h);
            plan.crop_x = rng.uniform_int(0, w - cfg.crop_w);
        }
    }
    return plan;
}

JitterParams draw_jitter(Rng& rng, const TrainConfig& cfg) {
    JitterParams jit;
    if (cfg.color_jitter) {
        for (int c = 0; c < 3; ++c) {
            jit.scale[static_cast<std::size_t>(c)] = rng.uniform(0.9, 1.1);
            jit.shift[static_cast<std::size_t>(c)] = rng.uniform(-0.05, 0.05);
        }
    }
    return jit;
}

}  // namespace

TrainResult train_zodi(SegBackbone& m, const std::vector<TransferredPair>& pairs,
                       const TrainConfig& cfg) {
    cfg.validate();
    if (pairs.empty()) throw std::invalid_argument("train_zodi: empty pair list");

    const auto n_params = static_cast<std::size_t>(m.num_params());
    std::vector<double> vel(n_params, 0.0), g(n_params, 0.0);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    Rng rng(derive_seed(cfg.seed, 0x7a11ULL));
    const long batches_per_epoch =
        (static_cast<long>(pairs.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const long total_updates = static_cast<long>(cfg.epochs) * batches_per_epoch;
    long update = 0;

    TrainResult res;
    res.history.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        LossBreakdown epoch_sum;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(g.begin(), g.end(), 0.0);

            for (std::size_t k = start; k < stop; ++k) {
                const TransferredPair& pair = pairs[order[k]];
                AugPlan plan = draw_plan(rng, cfg, pair.source.image.height(),
                                         pair.source.image.width());
                JitterParams js = draw_jitter(rng, cfg);
                JitterParams jg = draw_jitter(rng, cfg);
                if (cfg.observer) cfg.observer({epoch, order[k], plan, js, jg});

                Tensor img = apply_jitter(apply_spatial(pair.source.image, plan), js);
                Tensor gen = apply_jitter(apply_spatial(pair.generated, plan), jg);
                ClassMap map = apply_spatial(pair.layout, plan);

                LossBreakdown lb = zodi_loss_grad(m, img, gen, map, cfg.lambda, g.data());
                epoch_sum.task += lb.task;
                epoch_sum.sim += lb.sim;
                epoch_sum.total += lb.total;
                ++seen;
            }

            const double bn = static_cast<double>(stop - start);
            const double frac = static_cast<double>(update) / static_cast<double>(total_updates);
            const double lr = cfg.lr0 * std::pow(1.0 - frac, cfg.poly_power);
            auto& p = m.param_data();
            for (std::size_t i = 0; i < n_params; ++i) {
                const double gi = g[i] / bn + cfg.weight_decay * p[i];
                vel[i] = cfg.momentum * vel[i] + gi;
                p[i] -= lr * vel[i];
            }
            ++update;
        }

        LossBreakdown mean;
        mean.lambda = cfg.lambda;
        mean.task = epoch_sum.task / static_cast<double>(seen);
        mean.sim = epoch_sum.sim / static_cast<double>(seen);
        mean.total = epoch_sum.total / static_cast<double>(seen);
        res.history.push_back(mean);
    }
    return res;
}

TrainResult train_source_only(SegBackbone& m, const std::vector<SceneSample>& samples,
                              const TrainConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("train_source_only: empty sample list");
    std::vector<TransferredPair> pairs;
    pairs.reserve(samples.size());
    for (const SceneSample& s : samples) {
        TransferredPair p;
        p.source = s;
        p.generated = s.image;
        p.layout = s.layout;
        pairs.push_back(std::move(p));
    }
    TrainConfig base = cfg;
    base.lambda = 0.0;
    return train_zodi(m, pairs, base);
}

}  // namespace zodi
