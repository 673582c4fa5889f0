// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zodi/checkpoint.hpp"
#include "zodi/image_io.hpp"
#include "zodi/metrics.hpp"
#include "zodi/rng.hpp"

namespace zodi {
namespace {

using nlohmann::json;

// Stage-level seed stream tags; every derived stream hangs off the master
// seed so one value pins the whole pipeline.
constexpr std::uint64_t kDenoiserInitTag = 0xd0e1;
constexpr std::uint64_t kPretrainTag = 0x93e7;
constexpr std::uint64_t kTransferTag = 0x7a45;
constexpr std::uint64_t kSegInitTag = 0x5e91;
constexpr std::uint64_t kTrainTag = 0x7247;

std::string pair_file_name(const char* stem, int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, index, ext);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw PipelineError("failed writing " + path.string());
}

json json_at(const json& j, const char* key, const std::string& origin) {
    if (!j.contains(key))
        throw PipelineError(origin + ": missing key '" + std::string(key) + "'");
    return j.at(key);
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw PipelineError(path.string() + ": invalid JSON");
    return j;
}

json seed_range_json(const SeedRange& r) {
    return json{{"start", r.start}, {"count", r.count}};
}

json splits_json(const SplitManifest& m) {
    json eval = json::object();
    for (const auto& [d, r] : m.eval_target) eval[domain_name(d)] = seed_range_json(r);
    return json{{"source_domain", domain_name(m.source_domain)},
                {"pretrain", seed_range_json(m.pretrain)},
                {"adapt_source", seed_range_json(m.adapt_source)},
                {"eval_target", eval}};
}

// The denoiser checkpoint must describe the same model the config would
// build, otherwise the schedule and the weights silently disagree.
Denoiser load_matching_denoiser(const RunConfig& cfg, const std::filesystem::path& ckpt) {
    if (!std::filesystem::exists(ckpt))
        throw PipelineError("denoiser checkpoint not found at " + ckpt.string() +
                            "; run the pretrain stage first");
    Denoiser den = load_denoiser(ckpt);
    if (!(den.config() == cfg.denoiser.make_denoiser_config()))
        throw PipelineError("checkpoint " + ckpt.string() +
                            " was trained with a different denoiser config");
    return den;
}

// Artifact arguments (dataset dirs, checkpoints, run dirs) resolve against
// the same root the stages write under, so a config plus relative paths
// reproduces bit-for-bit no matter where the root points.
std::filesystem::path resolve_artifact_path(const std::filesystem::path& p) {
    return p.is_absolute() ? p : output_root() / p;
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::string format_cell(double v, int width, bool sign) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), sign ? "%+*.3f" : "%*.3f", width, v);
    return buf;
}

}  // namespace

const char* train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::source_only: return "source_only";
        case TrainMode::zodi: return "zodi";
        case TrainMode::zodi_no_sim: return "zodi_no_sim";
    }
    throw std::invalid_argument("unknown train mode");
}

TrainMode train_mode_from_name(const std::string& name) {
    for (TrainMode m : {TrainMode::source_only, TrainMode::zodi, TrainMode::zodi_no_sim})
        if (name == train_mode_name(m)) return m;
    throw std::invalid_argument("unknown train mode '" + name + "'");
}

PretrainOutcome run_pretrain(const RunConfig& cfg) {
    cfg.validate();
    const std::filesystem::path dir = resolve_out_dir(cfg);
    write_config_echo(cfg, dir);

    const SplitManifest manifest = make_split_manifest(cfg.world.make_split_config());
    const std::vector<SceneSample> corpus = render_pretrain_split(manifest);
    const NoiseSchedule sched = build_schedule(cfg.denoiser.t_steps, cfg.denoiser.schedule);

    Denoiser model(cfg.denoiser.make_denoiser_config(),
                   derive_seed(cfg.master_seed, kDenoiserInitTag));
    const PretrainConfig pcfg =
        cfg.denoiser.pretrain.make_pretrain_config(derive_seed(cfg.master_seed, kPretrainTag));
    PretrainOutcome out;
    out.history = pretrain_denoiser(model, corpus, sched, pcfg);

    std::ostringstream tsv;
    tsv << "epoch\tloss\n";
    tsv.precision(17);
    for (std::size_t e = 0; e < out.history.size(); ++e)
        tsv << (e + 1) << '\t' << out.history[e] << '\n';
    write_text_file(dir / "pretrain_loss.tsv", tsv.str());
    write_ppm(dir / "pretrain_loss.ppm", plot_series(out.history));

    out.run_dir = dir;
    out.checkpoint = dir / "denoiser.ckpt";
    save_denoiser(out.checkpoint, model);
    return out;
}

TransferOutcome run_transfer(const RunConfig& cfg, Domain target) {
    cfg.validate();
    const std::filesystem::path dir = resolve_out_dir(cfg);
    const Denoiser den = load_matching_denoiser(cfg, dir / "denoiser.ckpt");
    const NoiseSchedule sched = build_schedule(cfg.denoiser.t_steps, cfg.denoiser.schedule);
    const TransferConfig tc = cfg.transfer.make_transfer_config(target);

    const SplitManifest manifest = make_split_manifest(cfg.world.make_split_config());
    const std::vector<SceneSample> sources = render_adapt_split(manifest);
    const std::uint64_t transfer_seed =
        derive_seed(cfg.master_seed, kTransferTag, static_cast<std::uint64_t>(target));
    const std::vector<TransferredPair> pairs =
        transfer_dataset(sources, tc, den, sched, transfer_seed);

    TransferOutcome out;
    out.dataset_dir =
        dir / (std::string("dataset_") + variant_name(tc.variant) + "_" + domain_name(target));
    std::filesystem::create_directories(out.dataset_dir);
    write_config_echo(cfg, out.dataset_dir);

    json entries = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const int idx = static_cast<int>(i);
        const std::string gen_name = pair_file_name("gen", idx, "ppm");
        const std::string map_name = pair_file_name("map", idx, "pgm");
        write_ppm(out.dataset_dir / gen_name, pairs[i].generated);
        write_pgm(out.dataset_dir / map_name, pairs[i].layout);
        entries.push_back({{"index", idx},
                           {"source_seed", pairs[i].source.seed},
                           {"gen", gen_name},
                           {"map", map_name}});
    }

    json manifest_doc{{"schema_version", 1},
                      {"kind", "transfer_dataset"},
                      {"source_domain", domain_name(manifest.source_domain)},
                      {"target", domain_name(tc.target)},
                      {"variant", variant_name(tc.variant)},
                      {"strength", tc.strength},
                      {"steps", tc.steps},
                      {"invert_condition_on_target", tc.invert_condition_on_target},
                      {"t_steps", cfg.denoiser.t_steps},
                      {"schedule", schedule_kind_name(cfg.denoiser.schedule)},
                      {"transfer_seed", transfer_seed},
                      {"count", pairs.size()},
                      {"render_domains",
                       json{{domain_name(manifest.source_domain), pairs.size()}}},
                      {"entries", entries}};
    out.manifest_path = out.dataset_dir / "manifest.json";
    write_text_file(out.manifest_path, manifest_doc.dump(2) + "\n");

    const std::size_t sheet_n = std::min<std::size_t>(pairs.size(), 8);
    std::vector<Tensor> tops, bottoms;
    for (std::size_t i = 0; i < sheet_n; ++i) {
        tops.push_back(pairs[i].source.image);
        bottoms.push_back(pairs[i].generated);
    }
    out.contact_sheet = out.dataset_dir / "contact_sheet.ppm";
    write_ppm(out.contact_sheet, contact_sheet(tops, bottoms));

    out.pair_count = static_cast<int>(pairs.size());
    return out;
}

LoadedDataset load_dataset(const std::filesystem::path& dir,
                           std::map<std::string, int>* render_audit) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw PipelineError("no dataset manifest at " + manifest_path.string());
    const json j = load_json_file(manifest_path);
    const std::string origin = manifest_path.string();

    if (json_at(j, "schema_version", origin).get<int>() != 1)
        throw PipelineError(origin + ": unsupported schema_version");
    if (json_at(j, "kind", origin).get<std::string>() != "transfer_dataset")
        throw PipelineError(origin + ": not a transfer dataset manifest");

    LoadedDataset ds;
    ds.source_domain = domain_from_name(json_at(j, "source_domain", origin).get<std::string>());
    ds.target = domain_from_name(json_at(j, "target", origin).get<std::string>());
    ds.variant = variant_from_name(json_at(j, "variant", origin).get<std::string>());

    TransferConfig tc;
    tc.target = ds.target;
    tc.variant = ds.variant;
    tc.strength = json_at(j, "strength", origin).get<double>();
    tc.steps = json_at(j, "steps", origin).get<int>();
    tc.invert_condition_on_target =
        json_at(j, "invert_condition_on_target", origin).get<bool>();

    const json entries = json_at(j, "entries", origin);
    const std::size_t count = json_at(j, "count", origin).get<std::size_t>();
    if (!entries.is_array() || entries.size() != count)
        throw PipelineError(origin + ": entry list does not match the recorded count");

    for (const json& e : entries) {
        const std::uint64_t seed = json_at(e, "source_seed", origin).get<std::uint64_t>();
        SceneSample source = render_seed(seed, ds.source_domain);
        if (render_audit) ++(*render_audit)[domain_name(ds.source_domain)];

        TransferredPair pair;
        pair.generated = read_ppm(dir / json_at(e, "gen", origin).get<std::string>());
        const ClassMap stored =
            read_pgm(dir / json_at(e, "map", origin).get<std::string>(), kNumClasses);
        if (!(stored == source.layout))
            throw PipelineError(origin + ": stored map for seed " + std::to_string(seed) +
                                " does not match the re-rendered source layout");
        if (!pair.generated.same_shape(source.image))
            throw PipelineError(origin + ": generated image shape mismatch for seed " +
                                std::to_string(seed));
        pair.layout = source.layout;
        pair.config = tc;
        pair.source = std::move(source);
        ds.pairs.push_back(std::move(pair));
    }
    return ds;
}

TrainOutcome run_train(const RunConfig& cfg, TrainMode mode,
                       const std::filesystem::path& dataset_dir) {
    cfg.validate();
    const std::filesystem::path dir = resolve_out_dir(cfg);
    const SplitManifest manifest = make_split_manifest(cfg.world.make_split_config());

    TrainOutcome out;
    LoadedDataset ds;
    std::vector<SceneSample> source_samples;
    std::string dir_name = std::string("train_") + train_mode_name(mode);
    if (mode == TrainMode::source_only) {
        source_samples = render_adapt_split(manifest);
        out.adaptation_render_domains[domain_name(manifest.source_domain)] +=
            static_cast<int>(source_samples.size());
    } else {
        if (dataset_dir.empty())
            throw PipelineError(std::string("mode ") + train_mode_name(mode) +
                                " needs a dataset directory");
        ds = load_dataset(resolve_artifact_path(dataset_dir), &out.adaptation_render_domains);
        dir_name += std::string("_") + domain_name(ds.target);
        if (ds.variant != Variant::zodi) dir_name += std::string("_") + variant_name(ds.variant);
    }

    out.train_dir = dir / dir_name;
    std::filesystem::create_directories(out.train_dir);
    write_config_echo(cfg, out.train_dir);

    const double lambda_used = mode == TrainMode::zodi ? cfg.trainer.lambda : 0.0;
    std::vector<SegModel> models;
    std::vector<TrainResult> results;
    for (std::uint64_t sk : cfg.trainer.seeds) {
        SegModel m(SegConfig{}, derive_seed(cfg.master_seed, kSegInitTag, sk));
        TrainConfig tc = cfg.trainer.make_train_config(derive_seed(cfg.master_seed, kTrainTag, sk));
        if (mode == TrainMode::zodi_no_sim) tc.lambda = 0.0;
        results.push_back(mode == TrainMode::source_only
                              ? train_source_only(m, source_samples, tc)
                              : train_zodi(m, ds.pairs, tc));
        const std::filesystem::path ckpt =
            out.train_dir / ("seg_seed" + std::to_string(sk) + ".ckpt");
        save_segmodel(ckpt, m);
        out.checkpoints.push_back(ckpt);
        models.push_back(std::move(m));
    }

    // Evaluation happens after every model is trained; target-domain renders
    // here score the models and never feed the training inputs, which is why
    // the audit above covers adaptation only.
    const std::map<Domain, std::vector<SceneSample>> eval_sets = render_eval_split(manifest);
    std::map<Domain, std::vector<double>> per_domain;
    for (const auto& [d, samples] : eval_sets) {
        for (const SegModel& m : models) per_domain[d].push_back(evaluate_miou(m, samples));
    }
    for (const auto& [d, vals] : per_domain) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        out.mean_miou[d] = mean;
        out.std_miou[d] = sample_std(vals, mean);
    }

    json domains = json::array();
    for (const auto& [d, r] : eval_sets) domains.push_back(domain_name(d));
    json per_seed = json::array();
    for (std::size_t k = 0; k < cfg.trainer.seeds.size(); ++k) {
        json history = json::array();
        for (const LossBreakdown& lb : results[k].history)
            history.push_back({{"task", lb.task}, {"sim", lb.sim}, {"total", lb.total}});
        json miou_by_domain = json::object();
        for (const auto& [d, vals] : per_domain) miou_by_domain[domain_name(d)] = vals[k];
        per_seed.push_back({{"seed", cfg.trainer.seeds[k]},
                            {"checkpoint", out.checkpoints[k].filename().string()},
                            {"history", history},
                            {"miou", miou_by_domain}});
    }
    json mean_j = json::object(), std_j = json::object();
    for (const auto& [d, v] : out.mean_miou) mean_j[domain_name(d)] = v;
    for (const auto& [d, v] : out.std_miou) std_j[domain_name(d)] = v;
    json dataset_j;
    if (mode == TrainMode::source_only) {
        dataset_j = nullptr;
    } else {
        dataset_j = json{{"dir", dataset_dir.string()},
                         {"target", domain_name(ds.target)},
                         {"variant", variant_name(ds.variant)}};
    }
    json audit = json::object();
    for (const auto& [name, n] : out.adaptation_render_domains) audit[name] = n;

    json metrics{{"schema_version", 1},
                 {"kind", "train_metrics"},
                 {"mode", train_mode_name(mode)},
                 {"lambda", lambda_used},
                 {"master_seed", cfg.master_seed},
                 {"dataset", dataset_j},
                 {"splits", splits_json(manifest)},
                 {"domains", domains},
                 {"seeds", cfg.trainer.seeds},
                 {"per_seed", per_seed},
                 {"mean_miou", mean_j},
                 {"std_miou", std_j},
                 {"adaptation_render_domains", audit}};
    out.metrics_path = out.train_dir / "metrics.json";
    write_text_file(out.metrics_path, metrics.dump(2) + "\n");
    return out;
}

std::map<Domain, double> run_evaluate(const RunConfig& cfg,
                                      const std::filesystem::path& seg_checkpoint) {
    cfg.validate();
    const std::filesystem::path ckpt = resolve_artifact_path(seg_checkpoint);
    if (!std::filesystem::exists(ckpt))
        throw PipelineError("segmentation checkpoint not found at " + ckpt.string());
    const SegModel model = load_segmodel(ckpt);
    const SplitManifest manifest = make_split_manifest(cfg.world.make_split_config());
    std::map<Domain, double> scores;
    for (const auto& [d, samples] : render_eval_split(manifest))
        scores[d] = evaluate_miou(model, samples);
    return scores;
}

namespace {

struct ReportRun {
    TrainMode mode = TrainMode::source_only;
    bool has_dataset = false;
    Domain target = Domain::night;
    Variant variant = Variant::zodi;
    std::string label;
    std::vector<std::string> domains;
    std::map<std::string, double> mean;
};

ReportRun read_report_run(const std::filesystem::path& run_dir) {
    const std::filesystem::path dir = resolve_artifact_path(run_dir);
    const std::filesystem::path path = dir / "metrics.json";
    if (!std::filesystem::exists(path))
        throw PipelineError("no metrics.json in " + dir.string());
    const json j = load_json_file(path);
    const std::string origin = path.string();
    if (json_at(j, "kind", origin).get<std::string>() != "train_metrics")
        throw PipelineError(origin + ": not a training metrics file");

    ReportRun run;
    run.mode = train_mode_from_name(json_at(j, "mode", origin).get<std::string>());
    const json ds = json_at(j, "dataset", origin);
    if (!ds.is_null()) {
        run.has_dataset = true;
        run.target = domain_from_name(json_at(ds, "target", origin).get<std::string>());
        run.variant = variant_from_name(json_at(ds, "variant", origin).get<std::string>());
    }
    run.label = train_mode_name(run.mode);
    if (run.has_dataset) {
        run.label += "[";
        if (run.variant != Variant::zodi) run.label += std::string(variant_name(run.variant)) + ":";
        run.label += std::string(domain_name(run.target)) + "]";
    }
    for (const json& d : json_at(j, "domains", origin)) run.domains.push_back(d.get<std::string>());
    const json mean = json_at(j, "mean_miou", origin);
    for (const std::string& d : run.domains) {
        if (!mean.contains(d)) throw PipelineError(origin + ": mean_miou missing domain " + d);
        run.mean[d] = mean.at(d).get<double>();
    }
    return run;
}

}  // namespace

std::string run_report(const std::vector<std::filesystem::path>& run_dirs) {
    if (run_dirs.empty()) throw PipelineError("report needs at least one run directory");
    std::vector<ReportRun> runs;
    for (const auto& dir : run_dirs) runs.push_back(read_report_run(dir));

    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].domains != runs[0].domains)
            throw PipelineError("runs disagree on evaluation domains: " + run_dirs[0].string() +
                                " vs " + run_dirs[i].string());

    // Fixed presentation order independent of argument order keeps the
    // report byte-stable: baseline first, then by mode, target and variant.
    std::stable_sort(runs.begin(), runs.end(), [](const ReportRun& a, const ReportRun& b) {
        auto key = [](const ReportRun& r) {
            return std::tuple(static_cast<int>(r.mode),
                              r.has_dataset ? static_cast<int>(r.target) : -1,
                              static_cast<int>(r.variant));
        };
        return key(a) < key(b);
    });
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].label == runs[i - 1].label)
            throw PipelineError("duplicate run for " + runs[i].label);

    const std::vector<std::string>& domains = runs[0].domains;
    std::size_t dom_w = 6;
    for (const std::string& d : domains) dom_w = std::max(dom_w, d.size());
    std::vector<std::size_t> col_w;
    for (const ReportRun& r : runs) col_w.push_back(std::max<std::size_t>(r.label.size(), 8));

    std::ostringstream outs;
    auto pad = [&](const std::string& s, std::size_t w) {
        outs << std::string(w - std::min(w, s.size()), ' ') << s;
    };
    pad("domain", dom_w);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        outs << "  ";
        pad(runs[i].label, col_w[i]);
    }
    outs << '\n';
    for (const std::string& d : domains) {
        pad(d, dom_w);
        for (std::size_t i = 0; i < runs.size(); ++i)
            outs << "  " << format_cell(runs[i].mean.at(d), static_cast<int>(col_w[i]), false);
        outs << '\n';
    }

    const ReportRun* base = nullptr;
    for (const ReportRun& r : runs)
        if (r.mode == TrainMode::source_only) base = &r;
    if (base && runs.size() > 1) {
        outs << "\ndelta vs source_only\n";
        pad("domain", dom_w);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (runs[i].mode == TrainMode::source_only) continue;
            outs << "  ";
            pad(runs[i].label, col_w[i]);
        }
        outs << '\n';
        for (const std::string& d : domains) {
            pad(d, dom_w);
            for (std::size_t i = 0; i < runs.size(); ++i) {
                if (runs[i].mode == TrainMode::source_only) continue;
                outs << "  "
                     << format_cell(runs[i].mean.at(d) - base->mean.at(d),
                                    static_cast<int>(col_w[i]), true);
            }
            outs << '\n';
        }
    }
    return outs.str();
}

}  // namespace zodi
