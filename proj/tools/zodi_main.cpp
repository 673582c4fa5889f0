// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zodi/pipeline.hpp"

namespace {

using zodi::RunConfig;

RunConfig load_config(const std::string& path) {
    return RunConfig::from_file(path);
}

int cmd_pretrain(const std::string& config_path) {
    const zodi::PretrainOutcome out = zodi::run_pretrain(load_config(config_path));
    std::printf("pretrain: %d epochs, loss %.6f -> %.6f\n", static_cast<int>(out.history.size()),
                out.history.front(), out.history.back());
    std::printf("checkpoint: %s\n", out.checkpoint.string().c_str());
    return 0;
}

int cmd_transfer(const std::string& config_path, const std::string& domain,
                 const double* strength, const std::string* variant) {
    RunConfig cfg = load_config(config_path);
    if (strength) cfg.transfer.strength = *strength;
    if (variant) cfg.transfer.variant = zodi::variant_from_name(*variant);
    const zodi::TransferOutcome out =
        zodi::run_transfer(cfg, zodi::domain_from_name(domain));
    std::printf("transfer: %d pairs -> %s\n", out.pair_count, out.dataset_dir.string().c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& mode,
              const std::string& dataset) {
    const zodi::TrainOutcome out = zodi::run_train(
        load_config(config_path), zodi::train_mode_from_name(mode), dataset);
    for (const auto& [d, mean] : out.mean_miou)
        std::printf("miou[%s] = %.4f +- %.4f\n", zodi::domain_name(d), mean, out.std_miou.at(d));
    std::printf("metrics: %s\n", out.metrics_path.string().c_str());
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint) {
    const auto scores = zodi::run_evaluate(load_config(config_path), checkpoint);
    for (const auto& [d, v] : scores) std::printf("miou[%s] = %.4f\n", zodi::domain_name(d), v);
    return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_path) {
    std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
    const std::string table = zodi::run_report(paths);
    if (out_path.empty()) {
        std::fputs(table.c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw zodi::PipelineError("cannot open " + out_path + " for writing");
        out << table;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layout-conditioned diffusion domain transfer on a synthetic scene world"};
    app.require_subcommand(1);

    std::string config_path, domain, variant, mode, dataset, checkpoint, report_out;
    double strength = 0.0;
    std::vector<std::string> run_dirs;

    CLI::App* pre = app.add_subcommand("pretrain", "Train the denoiser and save its checkpoint");
    pre->add_option("--config", config_path, "Run config JSON")->required();

    CLI::App* xfer = app.add_subcommand("transfer", "Write a transferred paired dataset");
    xfer->add_option("--config", config_path, "Run config JSON")->required();
    xfer->add_option("--domain", domain, "Target domain name")->required();
    CLI::Option* strength_opt =
        xfer->add_option("--strength", strength, "Override transfer strength in [0, 1]");
    CLI::Option* variant_opt =
        xfer->add_option("--variant", variant, "Override variant: zodi|sdedit|inst|no_si");

    CLI::App* train = app.add_subcommand("train", "Train segmentation models and write metrics");
    train->add_option("--config", config_path, "Run config JSON")->required();
    train->add_option("--mode", mode, "source_only|zodi|zodi_no_sim")->required();
    train->add_option("--dataset", dataset, "Dataset directory (zodi modes)");

    CLI::App* eval = app.add_subcommand("evaluate", "Score a saved segmentation model");
    eval->add_option("--config", config_path, "Run config JSON")->required();
    eval->add_option("--checkpoint", checkpoint, "Segmentation checkpoint")->required();

    CLI::App* report = app.add_subcommand("report", "Render the comparison table");
    report->add_option("dirs", run_dirs, "Training run directories")->required();
    report->add_option("--out", report_out, "Write the table here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) return cmd_pretrain(config_path);
        if (xfer->parsed())
            return cmd_transfer(config_path, domain,
                                strength_opt->count() ? &strength : nullptr,
                                variant_opt->count() ? &variant : nullptr);
        if (train->parsed()) return cmd_train(config_path, mode, dataset);
        if (eval->parsed()) return cmd_evaluate(config_path, checkpoint);
        if (report->parsed()) return cmd_report(run_dirs, report_out);
    } catch (const std::exception& e) {
        std::cerr << "zodi: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
