// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "zodi/classmap.hpp"
#include "zodi/nn.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// Segmentation network seen as two parts: an encoder F producing a feature
// grid (pooled to a vector for the similarity loss) and a decoder H producing
// per-class logits. The interface exists so loss-gradient checks can run on
// models small enough for exhaustive finite differences.
class SegBackbone {
 public:
    struct Eval {
        std::vector<double> features;  // length feature_dim()
        Tensor logits;                 // (num_classes, h, w)
    };

    virtual ~SegBackbone() = default;
    virtual int num_classes() const = 0;
    virtual int feature_dim() const = 0;
    virtual int num_params() const = 0;
    virtual std::vector<double>& param_data() = 0;
    virtual const std::vector<double>& param_data() const = 0;

    virtual Eval eval(const Tensor& image, nn::Tape* tape) const = 0;
    // gfeat empty means no feature-side gradient. Accumulates into grad.
    virtual void backward(const std::vector<double>& gfeat, const Tensor& glogits,
                          nn::Tape& tape, double* grad) const = 0;
};

struct SegConfig {
    int image_channels = 3;
    int num_classes = 5;

    void validate() const;
    bool operator==(const SegConfig&) const = default;
};

// Three-stage strided encoder (16, 32, 64 channels) with a bilinear-upsampling
// decoder; the pooled feature has fixed length 64. Input spatial dims must be
// multiples of 4 so the decoder output matches the input grid.
class SegModel final : public SegBackbone {
 public:
    static constexpr int kFeatureDim = 64;

    SegModel(const SegConfig& cfg, std::uint64_t init_seed);

    const SegConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    int num_classes() const override { return cfg_.num_classes; }
    int feature_dim() const override { return kFeatureDim; }
    int num_params() const override { return static_cast<int>(params_.size()); }
    std::vector<double>& param_data() override { return params_; }
    const std::vector<double>& param_data() const override { return params_; }

    Eval eval(const Tensor& image, nn::Tape* tape) const override;
    void backward(const std::vector<double>& gfeat, const Tensor& glogits, nn::Tape& tape,
                  double* grad) const override;

 private:
    void check_input(const Tensor& image) const;

    SegConfig cfg_;
    std::uint64_t init_seed_ = 0;
    nn::Conv2d enc1_, enc2_, enc3_, dec1_, dec2_, head_;
    std::vector<double> params_;
};

// Globally pooled encoder output; ignores the decoder entirely.
std::vector<double> extract_features(const SegBackbone& m, const Tensor& image);

// Per-pixel argmax over class logits; ties break toward the lowest index.
ClassMap predict_map(const SegBackbone& m, const Tensor& image);

}  // namespace zodi
