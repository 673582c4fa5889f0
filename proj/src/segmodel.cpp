// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/segmodel.hpp"

#include <stdexcept>
#include <string>

#include "zodi/rng.hpp"

namespace zodi {

void SegConfig::validate() const {
    if (image_channels < 1) throw std::invalid_argument("SegConfig: image_channels must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("SegConfig: num_classes must be >= 2");
}

SegModel::SegModel(const SegConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), init_seed_(init_seed) {
    cfg_.validate();
    enc1_ = {cfg_.image_channels, 16, 3, 1, 1};
    enc2_ = {16, 32, 3, 2, 1};
    enc3_ = {32, kFeatureDim, 3, 2, 1};
    dec1_ = {kFeatureDim, 32, 3, 1, 1};
    dec2_ = {32, 16, 3, 1, 1};
    head_ = {16, cfg_.num_classes, 1, 1, 0};

    int off = 0;
    for (nn::Conv2d* l : {&enc1_, &enc2_, &enc3_, &dec1_, &dec2_, &head_}) {
        l->w_off = off;
        l->b_off = off + l->out_c * l->in_c * l->ksize * l->ksize;
        off += l->param_count();
    }
    params_.assign(static_cast<std::size_t>(off), 0.0);
    Rng rng(derive_seed(init_seed, 0x5e6ULL));
    for (nn::Conv2d* l : {&enc1_, &enc2_, &enc3_, &dec1_, &dec2_, &head_})
        l->init(rng, params_.data());
}

void SegModel::check_input(const Tensor& image) const {
    if (image.channels() != cfg_.image_channels)
        throw std::invalid_argument("SegModel: image has " + std::to_string(image.channels()) +
                                    " channels, expected " + std::to_string(cfg_.image_channels));
    if (image.height() < 4 || image.width() < 4 || image.height() % 4 != 0 ||
        image.width() % 4 != 0)
        throw std::invalid_argument("SegModel: spatial dims must be multiples of 4");
}

SegModel::Eval SegModel::eval(const Tensor& image, nn::Tape* tape) const {
    check_input(image);
    const double* p = params_.data();
    Tensor e1 = nn::silu(enc1_.forward(image, p, tape), tape);
    Tensor e2 = nn::silu(enc2_.forward(e1, p, tape), tape);
    Tensor e3 = nn::silu(enc3_.forward(e2, p, tape), tape);

    Eval out;
    out.features = nn::global_avg_pool(e3);

    Tensor d1 = nn::silu(dec1_.forward(e3, p, tape), tape);
    Tensor u1 = nn::bilinear_up2(d1);
    Tensor d2 = nn::silu(dec2_.forward(u1, p, tape), tape);
    Tensor u2 = nn::bilinear_up2(d2);
    out.logits = head_.forward(u2, p, tape);
    return out;
}

void SegModel::backward(const std::vector<double>& gfeat, const Tensor& glogits, nn::Tape& tape,
                        double* grad) const {
    if (!gfeat.empty() && gfeat.size() != static_cast<std::size_t>(kFeatureDim))
        throw std::invalid_argument("SegModel::backward: gfeat length mismatch");
    const double* p = params_.data();

    Tensor g_u2 = head_.backward(glogits, p, grad, tape);
    Tensor g_a5 = nn::silu_backward(nn::bilinear_up2_backward(g_u2), tape);
    Tensor g_u1 = dec2_.backward(g_a5, p, grad, tape);
    Tensor g_a4 = nn::silu_backward(nn::bilinear_up2_backward(g_u1), tape);
    Tensor g_e3 = dec1_.backward(g_a4, p, grad, tape);

    if (!gfeat.empty()) {
        Tensor g_pool = nn::global_avg_pool_backward(gfeat, g_e3.height(), g_e3.width());
        axpy(1.0, g_pool, g_e3);
    }

    Tensor g_e2 = enc3_.backward(nn::silu_backward(g_e3, tape), p, grad, tape);
    Tensor g_e1 = enc2_.backward(nn::silu_backward(g_e2, tape), p, grad, tape);
    enc1_.backward(nn::silu_backward(g_e1, tape), p, grad, tape, /*need_gx=*/false);
}

std::vector<double> extract_features(const SegBackbone& m, const Tensor& image) {
    return m.eval(image, nullptr).features;
}

ClassMap predict_map(const SegBackbone& m, const Tensor& image) {
    Tensor logits = m.eval(image, nullptr).logits;
    ClassMap out(logits.height(), logits.width());
    for (int y = 0; y < logits.height(); ++y) {
        for (int x = 0; x < logits.width(); ++x) {
            int best = 0;
            double best_v = logits.at(0, y, x);
            for (int c = 1; c < logits.channels(); ++c) {
                if (logits.at(c, y, x) > best_v) {
                    best_v = logits.at(c, y, x);
                    best = c;
                }
            }
            out.at(y, x) = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

}  // namespace zodi
