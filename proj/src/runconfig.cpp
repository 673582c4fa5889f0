// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/runconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

namespace zodi {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

const json& expect_object(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_object()) bad(origin, "'" + path + "' must be an object");
    return j;
}

// Silent typos in a config would quietly reproduce the wrong experiment, so
// every object is checked against its full key list.
void reject_unknown(const json& obj, const std::string& origin, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end())
            bad(origin, "unknown key '" + (path.empty() ? item.key() : path + "." + item.key()) + "'");
    }
}

template <typename T>
void read_field(const json& obj, const std::string& origin, const std::string& path,
                const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        it->get_to(out);
    } catch (const json::exception&) {
        bad(origin, "key '" + (path.empty() ? std::string(key) : path + "." + key) +
                        "' has the wrong type");
    }
}

template <typename T, typename Parse>
void read_named(const json& obj, const std::string& origin, const std::string& path,
                const char* key, T& out, Parse parse) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string())
        bad(origin, "key '" + path + "." + key + "' must be a string");
    try {
        out = parse(it->get<std::string>());
    } catch (const std::exception& e) {
        bad(origin, "key '" + path + "." + key + "': " + e.what());
    }
}

}  // namespace

SplitConfig WorldSection::make_split_config() const {
    SplitConfig sc;
    sc.pretrain_count = pretrain_count;
    sc.adapt_count = adapt_count;
    sc.eval_count_per_domain = eval_count_per_domain;
    sc.seed_base = seed_base;
    return sc;
}

PretrainConfig PretrainSection::make_pretrain_config(std::uint64_t seed) const {
    PretrainConfig pc;
    pc.epochs = epochs;
    pc.batch_size = batch_size;
    pc.lr = lr;
    pc.high_t_bias = high_t_bias;
    pc.crop_h = crop_h;
    pc.crop_w = crop_w;
    pc.seed = seed;
    return pc;
}

DenoiserConfig DenoiserSection::make_denoiser_config() const {
    DenoiserConfig dc;
    dc.t_steps = t_steps;
    dc.base_channels = base_channels;
    dc.emb_dim = emb_dim;
    return dc;
}

TransferConfig TransferSection::make_transfer_config(Domain target) const {
    TransferConfig tc;
    tc.target = target;
    tc.strength = strength < 0.0 ? default_strength(target) : strength;
    tc.variant = variant;
    tc.steps = steps;
    tc.invert_condition_on_target = invert_condition_on_target;
    return tc;
}

TrainConfig TrainerSection::make_train_config(std::uint64_t run_seed) const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.lr0 = lr0;
    tc.poly_power = poly_power;
    tc.momentum = momentum;
    tc.weight_decay = weight_decay;
    tc.lambda = lambda;
    tc.flip = flip;
    tc.color_jitter = color_jitter;
    tc.crop_h = crop_h;
    tc.crop_w = crop_w;
    tc.seed = run_seed;
    return tc;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), path.string());
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        bad(origin, std::string("invalid JSON: ") + e.what());
    }
    expect_object(root, origin, "(root)");

    auto ver = root.find("schema_version");
    if (ver == root.end()) bad(origin, "missing 'schema_version'");
    if (!ver->is_number_integer() || ver->get<int>() != kSchemaVersion)
        bad(origin, "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");

    reject_unknown(root, origin, "",
                   {"schema_version", "master_seed", "out_dir", "world", "denoiser", "transfer",
                    "trainer"});

    RunConfig cfg;
    read_field(root, origin, "", "master_seed", cfg.master_seed);
    read_field(root, origin, "", "out_dir", cfg.out_dir);

    if (auto it = root.find("world"); it != root.end()) {
        const json& w = expect_object(*it, origin, "world");
        reject_unknown(w, origin, "world",
                       {"pretrain_count", "adapt_count", "eval_count_per_domain", "seed_base"});
        read_field(w, origin, "world", "pretrain_count", cfg.world.pretrain_count);
        read_field(w, origin, "world", "adapt_count", cfg.world.adapt_count);
        read_field(w, origin, "world", "eval_count_per_domain", cfg.world.eval_count_per_domain);
        read_field(w, origin, "world", "seed_base", cfg.world.seed_base);
    }

    if (auto it = root.find("denoiser"); it != root.end()) {
        const json& d = expect_object(*it, origin, "denoiser");
        reject_unknown(d, origin, "denoiser",
                       {"t_steps", "base_channels", "emb_dim", "schedule", "pretrain"});
        read_field(d, origin, "denoiser", "t_steps", cfg.denoiser.t_steps);
        read_field(d, origin, "denoiser", "base_channels", cfg.denoiser.base_channels);
        read_field(d, origin, "denoiser", "emb_dim", cfg.denoiser.emb_dim);
        read_named(d, origin, "denoiser", "schedule", cfg.denoiser.schedule,
                   schedule_kind_from_name);
        if (auto pit = d.find("pretrain"); pit != d.end()) {
            const json& p = expect_object(*pit, origin, "denoiser.pretrain");
            reject_unknown(p, origin, "denoiser.pretrain",
                           {"epochs", "batch_size", "lr", "high_t_bias", "crop_h", "crop_w"});
            read_field(p, origin, "denoiser.pretrain", "epochs", cfg.denoiser.pretrain.epochs);
            read_field(p, origin, "denoiser.pretrain", "batch_size",
                       cfg.denoiser.pretrain.batch_size);
            read_field(p, origin, "denoiser.pretrain", "lr", cfg.denoiser.pretrain.lr);
            read_field(p, origin, "denoiser.pretrain", "high_t_bias",
                       cfg.denoiser.pretrain.high_t_bias);
            read_field(p, origin, "denoiser.pretrain", "crop_h", cfg.denoiser.pretrain.crop_h);
            read_field(p, origin, "denoiser.pretrain", "crop_w", cfg.denoiser.pretrain.crop_w);
        }
    }

    if (auto it = root.find("transfer"); it != root.end()) {
        const json& t = expect_object(*it, origin, "transfer");
        reject_unknown(t, origin, "transfer",
                       {"steps", "variant", "strength", "invert_condition_on_target"});
        read_field(t, origin, "transfer", "steps", cfg.transfer.steps);
        read_named(t, origin, "transfer", "variant", cfg.transfer.variant, variant_from_name);
        read_field(t, origin, "transfer", "strength", cfg.transfer.strength);
        read_field(t, origin, "transfer", "invert_condition_on_target",
                   cfg.transfer.invert_condition_on_target);
    }

    if (auto it = root.find("trainer"); it != root.end()) {
        const json& t = expect_object(*it, origin, "trainer");
        reject_unknown(t, origin, "trainer",
                       {"epochs", "batch_size", "lr0", "poly_power", "momentum", "weight_decay",
                        "lambda", "flip", "color_jitter", "crop_h", "crop_w", "seeds"});
        read_field(t, origin, "trainer", "epochs", cfg.trainer.epochs);
        read_field(t, origin, "trainer", "batch_size", cfg.trainer.batch_size);
        read_field(t, origin, "trainer", "lr0", cfg.trainer.lr0);
        read_field(t, origin, "trainer", "poly_power", cfg.trainer.poly_power);
        read_field(t, origin, "trainer", "momentum", cfg.trainer.momentum);
        read_field(t, origin, "trainer", "weight_decay", cfg.trainer.weight_decay);
        read_field(t, origin, "trainer", "lambda", cfg.trainer.lambda);
        read_field(t, origin, "trainer", "flip", cfg.trainer.flip);
        read_field(t, origin, "trainer", "color_jitter", cfg.trainer.color_jitter);
        read_field(t, origin, "trainer", "crop_h", cfg.trainer.crop_h);
        read_field(t, origin, "trainer", "crop_w", cfg.trainer.crop_w);
        read_field(t, origin, "trainer", "seeds", cfg.trainer.seeds);
    }

    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad(origin, e.what());
    }
    return cfg;
}

std::string RunConfig::to_json_text() const {
    json root = {
        {"schema_version", schema_version},
        {"master_seed", master_seed},
        {"out_dir", out_dir},
        {"world",
         {{"pretrain_count", world.pretrain_count},
          {"adapt_count", world.adapt_count},
          {"eval_count_per_domain", world.eval_count_per_domain},
          {"seed_base", world.seed_base}}},
        {"denoiser",
         {{"t_steps", denoiser.t_steps},
          {"base_channels", denoiser.base_channels},
          {"emb_dim", denoiser.emb_dim},
          {"schedule", schedule_kind_name(denoiser.schedule)},
          {"pretrain",
           {{"epochs", denoiser.pretrain.epochs},
            {"batch_size", denoiser.pretrain.batch_size},
            {"lr", denoiser.pretrain.lr},
            {"high_t_bias", denoiser.pretrain.high_t_bias},
            {"crop_h", denoiser.pretrain.crop_h},
            {"crop_w", denoiser.pretrain.crop_w}}}}},
        {"transfer",
         {{"steps", transfer.steps},
          {"variant", variant_name(transfer.variant)},
          {"strength", transfer.strength},
          {"invert_condition_on_target", transfer.invert_condition_on_target}}},
        {"trainer",
         {{"epochs", trainer.epochs},
          {"batch_size", trainer.batch_size},
          {"lr0", trainer.lr0},
          {"poly_power", trainer.poly_power},
          {"momentum", trainer.momentum},
          {"weight_decay", trainer.weight_decay},
          {"lambda", trainer.lambda},
          {"flip", trainer.flip},
          {"color_jitter", trainer.color_jitter},
          {"crop_h", trainer.crop_h},
          {"crop_w", trainer.crop_w},
          {"seeds", trainer.seeds}}},
    };
    return root.dump(2) + "\n";
}

void RunConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
    if (world.pretrain_count < 1 || world.adapt_count < 1 || world.eval_count_per_domain < 1)
        throw ConfigError("world counts must be >= 1");
    denoiser.make_denoiser_config().validate();
    denoiser.pretrain.make_pretrain_config(0).validate();
    if (transfer.steps < 0) throw ConfigError("transfer.steps must be >= 0");
    if (transfer.strength > 1.0) throw ConfigError("transfer.strength must be <= 1");
    if (trainer.seeds.empty()) throw ConfigError("trainer.seeds must not be empty");
    if (std::set<std::uint64_t>(trainer.seeds.begin(), trainer.seeds.end()).size() !=
        trainer.seeds.size())
        throw ConfigError("trainer.seeds must be distinct");
    trainer.make_train_config(0).validate();
    // Per-domain default strengths are substituted at use; a fixed strength
    // must itself be a valid trajectory fraction.
    if (transfer.strength >= 0.0) transfer.make_transfer_config(Domain::night).validate();
}

std::filesystem::path output_root() {
    if (const char* root = std::getenv("ZODI_OUT_ROOT"); root != nullptr && root[0] != '\0')
        return std::filesystem::path(root);
    return std::filesystem::current_path();
}

std::filesystem::path resolve_out_dir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    return dir.is_absolute() ? dir : output_root() / dir;
}

void write_config_echo(const RunConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config_echo.json", std::ios::binary);
    if (!out) throw ConfigError((dir / "config_echo.json").string() + ": cannot write echo");
    out << cfg.to_json_text();
}

}  // namespace zodi
