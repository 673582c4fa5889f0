// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "zodi/conditioning.hpp"
#include "zodi/nn.hpp"
#include "zodi/scene.hpp"
#include "zodi/schedule.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// Noise predictor with parameters and a hand-rolled backward pass. Kept as
// an interface so tests can swap in models small enough for exhaustive
// finite-difference checks.
class TrainableDenoiser : public NoisePredictor {
 public:
    virtual int num_params() const = 0;
    virtual std::vector<double>& param_data() = 0;
    virtual const std::vector<double>& param_data() const = 0;
    virtual Tensor predict_tape(const Tensor& z, int t, const Conditioning& cond,
                                nn::Tape& tape) const = 0;
    // gy is dL/d(prediction); accumulates into grad (size num_params).
    virtual void backward(const Tensor& gy, int t, const Conditioning& cond, nn::Tape& tape,
                          double* grad) const = 0;
};

struct DenoiserConfig {
    int t_steps = 50;
    int image_channels = 3;
    int base_channels = 16;
    int emb_dim = 16;
    int num_domains = kNumDomains;
    int num_classes = kNumClasses;

    void validate() const;
    bool operator==(const DenoiserConfig&) const = default;
};

// Two-scale convolutional noise predictor. The layout enters as one-hot
// channels concatenated to z; timestep and domain enter as learned embeddings
// projected to per-channel scale/shift modulation at the input, bottleneck
// and pre-output stages. The final conv starts at zero so an untrained model
// predicts zero noise.
class Denoiser final : public TrainableDenoiser {
 public:
    Denoiser(const DenoiserConfig& cfg, std::uint64_t init_seed);

    const DenoiserConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }
    bool is_trained() const { return trained_; }
    void mark_trained(bool v) { trained_ = v; }

    int num_params() const override { return static_cast<int>(params_.size()); }
    std::vector<double>& param_data() override { return params_; }
    const std::vector<double>& param_data() const override { return params_; }

    Tensor predict(const Tensor& z, int t, const Conditioning& cond) const override;
    Tensor predict_tape(const Tensor& z, int t, const Conditioning& cond,
                        nn::Tape& tape) const override;
    void backward(const Tensor& gy, int t, const Conditioning& cond, nn::Tape& tape,
                  double* grad) const override;

 private:
    Tensor run(const Tensor& z, int t, const Conditioning& cond, nn::Tape* tape) const;
    void check_inputs(const Tensor& z, int t, const Conditioning& cond) const;
    Tensor layout_channels(const Conditioning& cond, int h, int w) const;

    DenoiserConfig cfg_;
    std::uint64_t init_seed_ = 0;
    bool trained_ = false;
    nn::Conv2d conv_in_, conv_down_, conv_mid_, conv_dec_, conv_out_;
    nn::Dense emb_proj_in_, emb_proj_mid_, emb_proj_dec_;
    int time_off_ = 0, domain_off_ = 0;
    std::vector<double> params_;
};

// Mean squared error between eps and the model prediction at timestep t,
// with the gradient accumulated into grad. Exact same loss value as
// denoiser_loss_at.
double denoiser_loss_grad(const TrainableDenoiser& model, const Tensor& z0,
                          const Conditioning& cond, const NoiseSchedule& sched, int t,
                          const Tensor& eps, double* grad);

struct PretrainConfig {
    int epochs = 30;
    int batch_size = 8;
    double lr = 2e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // Fraction of training draws whose timestep is resampled from the upper
    // half of the schedule. Heavily noised steps are where the model must
    // rely on the layout and domain conditioning instead of the latent, so
    // oversampling them strengthens conditional control at a given budget.
    // Zero keeps plain uniform sampling.
    double high_t_bias = 0.0;
    // Random patch size for training draws; zero trains on full frames. The
    // network is fully convolutional, so patch training is valid and cuts
    // per-draw cost by the area ratio. Patches must be even on both axes so
    // the down/up stage keeps its shape contract.
    int crop_h = 0, crop_w = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

// Trains the denoiser in place on (image, layout, domain) triples drawn from
// the corpus, sampling a fresh timestep and noise per example per epoch.
// Returns per-epoch mean losses, each batch scored before its update, so the
// first entries reflect the untrained model.
std::vector<double> pretrain_denoiser(Denoiser& model, const std::vector<SceneSample>& corpus,
                                      const NoiseSchedule& sched, const PretrainConfig& cfg);

// Mean denoising loss over a corpus with fixed per-item noise draws.
double mean_denoiser_loss(const NoisePredictor& model, const std::vector<SceneSample>& corpus,
                          const NoiseSchedule& sched, std::uint64_t seed);

}  // namespace zodi
