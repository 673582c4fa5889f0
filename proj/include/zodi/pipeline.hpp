// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zodi/runconfig.hpp"
#include "zodi/trainer.hpp"
#include "zodi/transfer.hpp"

// Stage orchestration behind the command-line interface. Each stage reads
// its inputs from disk artifacts (or the procedural world), writes its
// outputs plus a config echo into the run directory, and is byte-identical
// across repeated runs with the same master seed.
//
// The adaptation stages carry a render audit: a count of procedural renders
// per domain made while assembling training inputs. A zero-shot run must
// show source-domain renders only, and the audit lands in the metrics file
// so the claim is checkable from the artifact.

namespace zodi {

struct PipelineError : std::runtime_error {
    explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class TrainMode { source_only, zodi, zodi_no_sim };
const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

struct PretrainOutcome {
    std::filesystem::path run_dir;
    std::filesystem::path checkpoint;
    std::vector<double> history;  // per-epoch mean loss
};

// Renders the pretraining corpus, trains the denoiser and writes
// denoiser.ckpt, pretrain_loss.tsv and pretrain_loss.ppm.
PretrainOutcome run_pretrain(const RunConfig& cfg);

struct TransferOutcome {
    std::filesystem::path dataset_dir;
    std::filesystem::path manifest_path;
    std::filesystem::path contact_sheet;
    int pair_count = 0;
};

// Loads the pretrained denoiser and writes the paired dataset for one target
// domain: gen_NNNN.ppm + map_NNNN.pgm per source scene, a manifest, and a
// contact sheet of the first pairs.
TransferOutcome run_transfer(const RunConfig& cfg, Domain target);

struct LoadedDataset {
    Domain source_domain = Domain::day;
    Domain target = Domain::night;
    Variant variant = Variant::zodi;
    std::vector<TransferredPair> pairs;
};

// Rebuilds training pairs from a dataset directory; source images come from
// the recorded seeds, so the audit (when given) counts those renders.
LoadedDataset load_dataset(const std::filesystem::path& dir,
                           std::map<std::string, int>* render_audit = nullptr);

struct TrainOutcome {
    std::filesystem::path train_dir;
    std::filesystem::path metrics_path;
    std::vector<std::filesystem::path> checkpoints;  // one per seed
    std::map<Domain, double> mean_miou;
    std::map<Domain, double> std_miou;
    std::map<std::string, int> adaptation_render_domains;
};

// Trains one segmentation model per configured seed, evaluates each on every
// target-domain eval split and writes metrics.json. Modes zodi and
// zodi_no_sim train on the given dataset (zodi_no_sim forces lambda to 0);
// source_only ignores dataset_dir and trains on the source split alone.
TrainOutcome run_train(const RunConfig& cfg, TrainMode mode,
                       const std::filesystem::path& dataset_dir = {});

// Per-target-domain mIoU of one saved segmentation model on the eval split.
std::map<Domain, double> run_evaluate(const RunConfig& cfg,
                                      const std::filesystem::path& seg_checkpoint);

// Renders the method-by-domain comparison table from completed training run
// directories; deltas are listed against the source_only row when present.
// Byte-stable for fixed inputs.
std::string run_report(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace zodi
