// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zodi/denoiser.hpp"
#include "zodi/scene.hpp"
#include "zodi/schedule.hpp"
#include "zodi/trainer.hpp"
#include "zodi/transfer.hpp"

// Declarative run configuration: one JSON document with world, denoiser,
// transfer and trainer sections plus the master seed and output directory.
// Parsing is strict. Unknown keys anywhere are errors, the schema version
// must match exactly, and every run writes an echo of its effective config
// so artifacts are reproducible from disk alone.

namespace zodi {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct WorldSection {
    int pretrain_count = 512;
    int adapt_count = 256;
    int eval_count_per_domain = 128;
    std::uint64_t seed_base = 1000;

    SplitConfig make_split_config() const;
};

struct PretrainSection {
    int epochs = 30;
    int batch_size = 8;
    double lr = 2e-3;
    double high_t_bias = 0.0;
    int crop_h = 0, crop_w = 0;  // 0 trains on full frames

    PretrainConfig make_pretrain_config(std::uint64_t seed) const;
};

struct DenoiserSection {
    int t_steps = 50;
    int base_channels = 16;
    int emb_dim = 16;
    ScheduleKind schedule = ScheduleKind::cosine;
    PretrainSection pretrain;

    DenoiserConfig make_denoiser_config() const;
};

struct TransferSection {
    int steps = 0;  // reverse-step count; 0 walks every step from k down
    Variant variant = Variant::zodi;
    // Negative means "use the per-domain default strength".
    double strength = -1.0;
    bool invert_condition_on_target = true;

    TransferConfig make_transfer_config(Domain target) const;
};

struct TrainerSection {
    int epochs = 40;
    int batch_size = 4;
    double lr0 = 1e-2;
    double poly_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lambda = 0.1;
    bool flip = true;
    bool color_jitter = true;
    int crop_h = 24, crop_w = 48;
    std::vector<std::uint64_t> seeds = {0, 1, 2};

    TrainConfig make_train_config(std::uint64_t run_seed) const;
};

struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    int schema_version = kSchemaVersion;
    std::uint64_t master_seed = 1;
    std::string out_dir = "run";
    WorldSection world;
    DenoiserSection denoiser;
    TransferSection transfer;
    TrainerSection trainer;

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);
    std::string to_json_text() const;
    void validate() const;
};

// Root directory for all run artifacts: $ZODI_OUT_ROOT when set, otherwise
// the current directory. A config's out_dir is resolved beneath it unless
// already absolute.
std::filesystem::path output_root();
std::filesystem::path resolve_out_dir(const RunConfig& cfg);

// Writes <dir>/config_echo.json, creating the directory first.
void write_config_echo(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace zodi
