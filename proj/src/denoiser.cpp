// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "zodi/diffusion.hpp"

namespace zodi {

void DenoiserConfig::validate() const {
    if (t_steps < 1) throw std::invalid_argument("DenoiserConfig: t_steps must be >= 1");
    if (image_channels < 1 || base_channels < 1 || emb_dim < 1)
        throw std::invalid_argument("DenoiserConfig: channel/embedding dims must be >= 1");
    if (num_domains < 1 || num_classes < 1)
        throw std::invalid_argument("DenoiserConfig: num_domains and num_classes must be >= 1");
}

Denoiser::Denoiser(const DenoiserConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), init_seed_(init_seed) {
    cfg_.validate();
    int c = cfg_.base_channels;
    conv_in_ = {cfg_.image_channels + cfg_.num_classes, c, 3, 1, 1};
    conv_down_ = {c, 2 * c, 3, 2, 1};
    conv_mid_ = {2 * c, 2 * c, 3, 1, 1};
    conv_dec_ = {3 * c, c, 3, 1, 1};
    conv_out_ = {c, cfg_.image_channels, 3, 1, 1};
    emb_proj_in_ = {cfg_.emb_dim, 2 * c};
    emb_proj_mid_ = {cfg_.emb_dim, 4 * c};
    emb_proj_dec_ = {cfg_.emb_dim, 2 * c};

    int off = 0;
    auto place_conv = [&off](nn::Conv2d& l) {
        l.w_off = off;
        l.b_off = off + l.out_c * l.in_c * l.ksize * l.ksize;
        off += l.param_count();
    };
    place_conv(conv_in_);
    place_conv(conv_down_);
    place_conv(conv_mid_);
    place_conv(conv_dec_);
    place_conv(conv_out_);
    for (nn::Dense* d : {&emb_proj_in_, &emb_proj_mid_, &emb_proj_dec_}) {
        d->w_off = off;
        d->b_off = off + d->in_dim * d->out_dim;
        off += d->param_count();
    }
    time_off_ = off;
    off += (cfg_.t_steps + 1) * cfg_.emb_dim;
    domain_off_ = off;
    off += cfg_.num_domains * cfg_.emb_dim;

    params_.assign(static_cast<std::size_t>(off), 0.0);
    Rng rng(derive_seed(init_seed, 0xde01ULL));
    conv_in_.init(rng, params_.data());
    conv_down_.init(rng, params_.data());
    conv_mid_.init(rng, params_.data());
    conv_dec_.init(rng, params_.data());
    conv_out_.init(rng, params_.data());
    emb_proj_in_.init(rng, params_.data());
    emb_proj_mid_.init(rng, params_.data());
    emb_proj_dec_.init(rng, params_.data());
    for (int i = time_off_; i < static_cast<int>(params_.size()); ++i)
        params_[static_cast<std::size_t>(i)] = 0.3 * rng.normal();
    // Zero the output layer so the fresh model predicts zero noise; the loss
    // then starts at the variance of eps.
    std::fill(params_.begin() + conv_out_.w_off, params_.begin() + conv_out_.w_off + conv_out_.param_count(), 0.0);
}

void Denoiser::check_inputs(const Tensor& z, int t, const Conditioning& cond) const {
    if (z.channels() != cfg_.image_channels)
        throw std::invalid_argument("Denoiser: input has " + std::to_string(z.channels()) +
                                    " channels, expected " + std::to_string(cfg_.image_channels));
    if (z.height() < 2 || z.width() < 2 || z.height() % 2 != 0 || z.width() % 2 != 0)
        throw std::invalid_argument("Denoiser: spatial dims must be even and >= 2");
    if (t < 1 || t > cfg_.t_steps)
        throw std::invalid_argument("Denoiser: timestep " + std::to_string(t) +
                                    " outside [1, " + std::to_string(cfg_.t_steps) + "]");
    if (cond.domain_id < 0 || cond.domain_id >= cfg_.num_domains)
        throw std::invalid_argument("Denoiser: domain_id out of range");
    if (cond.use_layout) {
        if (cond.layout.h != z.height() || cond.layout.w != z.width())
            throw std::invalid_argument("Denoiser: layout shape does not match input");
        if (!cond.layout.values_in_range(cfg_.num_classes))
            throw std::invalid_argument("Denoiser: layout has out-of-range class ids");
    }
}

Tensor Denoiser::layout_channels(const Conditioning& cond, int h, int w) const {
    Tensor lay(cfg_.num_classes, h, w);
    if (!cond.use_layout) return lay;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lay.at(cond.layout.at(y, x), y, x) = 1.0;
    return lay;
}

Tensor Denoiser::run(const Tensor& z, int t, const Conditioning& cond, nn::Tape* tape) const {
    check_inputs(z, t, cond);
    const double* p = params_.data();
    std::vector<double> emb(static_cast<std::size_t>(cfg_.emb_dim));
    for (int i = 0; i < cfg_.emb_dim; ++i)
        emb[static_cast<std::size_t>(i)] =
            params_[static_cast<std::size_t>(time_off_ + t * cfg_.emb_dim + i)] +
            params_[static_cast<std::size_t>(domain_off_ + cond.domain_id * cfg_.emb_dim + i)];

    // The embedding modulates the stack at three points via per-channel
    // scale/shift: after the input conv, at the bottleneck, and right before
    // the output conv. Multiplicative modulation matters here because domains
    // act mostly as photometric gains, which additive biases express poorly.
    Tensor cat = nn::concat_channels(z, layout_channels(cond, z.height(), z.width()));
    Tensor h1 = conv_in_.forward(cat, p, tape);
    Tensor e1 = nn::silu(nn::film(h1, emb_proj_in_.forward(emb, p, tape), tape), tape);
    Tensor e2 = nn::silu(conv_down_.forward(e1, p, tape), tape);

    Tensor m = nn::film(e2, emb_proj_mid_.forward(emb, p, tape), tape);
    Tensor mid = nn::silu(conv_mid_.forward(m, p, tape), tape);
    Tensor cat2 = nn::concat_channels(nn::nearest_up2(mid), e1);
    Tensor d = conv_dec_.forward(cat2, p, tape);
    Tensor dec = nn::silu(nn::film(d, emb_proj_dec_.forward(emb, p, tape), tape), tape);
    return conv_out_.forward(dec, p, tape);
}

Tensor Denoiser::predict(const Tensor& z, int t, const Conditioning& cond) const {
    return run(z, t, cond, nullptr);
}

Tensor Denoiser::predict_tape(const Tensor& z, int t, const Conditioning& cond,
                              nn::Tape& tape) const {
    return run(z, t, cond, &tape);
}

void Denoiser::backward(const Tensor& gy, int t, const Conditioning& cond, nn::Tape& tape,
                        double* grad) const {
    const double* p = params_.data();
    std::vector<double> g_gb;
    Tensor g_d = nn::film_backward(nn::silu_backward(conv_out_.backward(gy, p, grad, tape), tape),
                                   tape, g_gb);
    std::vector<double> g_emb = emb_proj_dec_.backward(g_gb, p, grad, tape);
    Tensor g_cat2 = conv_dec_.backward(g_d, p, grad, tape);

    Tensor g_up, g_e1_skip;
    nn::split_channels(g_cat2, 2 * cfg_.base_channels, g_up, g_e1_skip);
    Tensor g_m =
        conv_mid_.backward(nn::silu_backward(nn::nearest_up2_backward(g_up), tape), p, grad, tape);
    Tensor g_e2 = nn::film_backward(g_m, tape, g_gb);
    {
        std::vector<double> ge = emb_proj_mid_.backward(g_gb, p, grad, tape);
        for (std::size_t i = 0; i < ge.size(); ++i) g_emb[i] += ge[i];
    }

    Tensor g_e1 = conv_down_.backward(nn::silu_backward(g_e2, tape), p, grad, tape);
    axpy(1.0, g_e1_skip, g_e1);
    Tensor g_h1 = nn::film_backward(nn::silu_backward(g_e1, tape), tape, g_gb);
    {
        std::vector<double> ge = emb_proj_in_.backward(g_gb, p, grad, tape);
        for (std::size_t i = 0; i < ge.size(); ++i) g_emb[i] += ge[i];
    }
    for (int i = 0; i < cfg_.emb_dim; ++i) {
        const double ge = g_emb[static_cast<std::size_t>(i)];
        grad[time_off_ + t * cfg_.emb_dim + i] += ge;
        grad[domain_off_ + cond.domain_id * cfg_.emb_dim + i] += ge;
    }
    conv_in_.backward(g_h1, p, grad, tape, /*need_gx=*/false);
}

double denoiser_loss_grad(const TrainableDenoiser& model, const Tensor& z0,
                          const Conditioning& cond, const NoiseSchedule& sched, int t,
                          const Tensor& eps, double* grad) {
    Tensor z_t = forward_noising(z0, t, eps, sched);
    nn::Tape tape;
    Tensor pred = model.predict_tape(z_t, t, cond, tape);
    check_same_shape(pred, eps, "denoiser_loss_grad");

    auto n = static_cast<double>(pred.size());
    double loss = 0.0;
    Tensor gy(pred.channels(), pred.height(), pred.width());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - eps[i];
        loss += d * d;
        gy[i] = 2.0 * d / n;
    }
    model.backward(gy, t, cond, tape, grad);
    return loss / n;
}

void PretrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("PretrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("PretrainConfig: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("PretrainConfig: lr must be positive");
    if (high_t_bias < 0.0 || high_t_bias >= 1.0)
        throw std::invalid_argument("PretrainConfig: high_t_bias must be in [0, 1)");
    if (crop_h < 0 || crop_w < 0 || (crop_h > 0) != (crop_w > 0))
        throw std::invalid_argument("PretrainConfig: crop sizes must both be set or both zero");
    if (crop_h > 0 && (crop_h % 2 != 0 || crop_w % 2 != 0))
        throw std::invalid_argument("PretrainConfig: crop sizes must be even");
}

namespace {

Conditioning sample_conditioning(const SceneSample& s) {
    Conditioning c;
    c.domain_id = static_cast<int>(s.domain);
    c.layout = s.layout;
    c.use_layout = true;
    return c;
}

}  // namespace

std::vector<double> pretrain_denoiser(Denoiser& model, const std::vector<SceneSample>& corpus,
                                      const NoiseSchedule& sched, const PretrainConfig& cfg) {
    cfg.validate();
    if (corpus.empty()) throw std::invalid_argument("pretrain_denoiser: empty corpus");
    if (sched.T != model.config().t_steps)
        throw std::invalid_argument("pretrain_denoiser: schedule length does not match model");

    auto n_params = static_cast<std::size_t>(model.num_params());
    std::vector<double> m(n_params, 0.0), v(n_params, 0.0), g(n_params, 0.0);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    Rng rng(derive_seed(cfg.seed, 0x9027ULL));
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(g.begin(), g.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const SceneSample& s = corpus[order[k]];
                int t = rng.uniform_int(1, sched.T);
                // The extra draws below are skipped when their feature is off
                // so existing seeds reproduce the plain stream exactly.
                if (cfg.high_t_bias > 0.0 && rng.uniform() < cfg.high_t_bias)
                    t = rng.uniform_int(sched.T / 2 + 1, sched.T);
                Tensor img = s.image;
                Conditioning cond = sample_conditioning(s);
                if (cfg.crop_h > 0) {
                    if (cfg.crop_h > img.height() || cfg.crop_w > img.width())
                        throw std::invalid_argument(
                            "pretrain_denoiser: crop larger than the corpus images");
                    const int cy = rng.uniform_int(0, img.height() - cfg.crop_h);
                    const int cx = rng.uniform_int(0, img.width() - cfg.crop_w);
                    Tensor patch(img.channels(), cfg.crop_h, cfg.crop_w);
                    ClassMap patch_map(cfg.crop_h, cfg.crop_w);
                    for (int ch = 0; ch < img.channels(); ++ch)
                        for (int y = 0; y < cfg.crop_h; ++y)
                            for (int x = 0; x < cfg.crop_w; ++x)
                                patch.at(ch, y, x) = img.at(ch, cy + y, cx + x);
                    for (int y = 0; y < cfg.crop_h; ++y)
                        for (int x = 0; x < cfg.crop_w; ++x)
                            patch_map.at(y, x) = s.layout.at(cy + y, cx + x);
                    img = std::move(patch);
                    cond.layout = std::move(patch_map);
                }
                Tensor eps(img.channels(), img.height(), img.width());
                fill_normal(eps, rng);
                batch_loss += denoiser_loss_grad(model, img, cond, sched, t, eps, g.data());
            }
            auto bn = static_cast<double>(stop - start);
            epoch_loss += batch_loss;
            seen += stop - start;

            ++step;
            double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            auto& p = model.param_data();
            for (std::size_t i = 0; i < n_params; ++i) {
                double gi = g[i] / bn;
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * gi;
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * gi * gi;
                p[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_eps);
            }
        }
        history.push_back(epoch_loss / static_cast<double>(seen));
    }
    model.mark_trained(true);
    return history;
}

double mean_denoiser_loss(const NoisePredictor& model, const std::vector<SceneSample>& corpus,
                          const NoiseSchedule& sched, std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("mean_denoiser_loss: empty corpus");
    double total = 0.0;
    for (const SceneSample& s : corpus) {
        Rng rng(derive_seed(seed, s.seed, 0x10dULL));
        int t = rng.uniform_int(1, sched.T);
        Tensor eps(s.image.channels(), s.image.height(), s.image.width());
        fill_normal(eps, rng);
        total += denoiser_loss_at(model, s.image, sample_conditioning(s), sched, t, eps);
    }
    return total / static_cast<double>(corpus.size());
}

}  // namespace zodi
