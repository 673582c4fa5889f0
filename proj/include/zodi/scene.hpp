// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zodi/classmap.hpp"
#include "zodi/tensor.hpp"

namespace zodi {

// Pixel classes of the synthetic road-scene world.
enum class SceneClass : int { sky = 0, road = 1, building = 2, car = 3, vegetation = 4 };
constexpr int kNumClasses = 5;

// Renderable domains. `day` is the source; the others are photometric or
// stylistic shifts of the same geometry.
enum class Domain : int { day = 0, night = 1, snow = 2, rain = 3, fog = 4, game = 5 };
constexpr int kNumDomains = 6;

const char* domain_name(Domain d);
Domain domain_from_name(const std::string& name);
std::vector<Domain> target_domains();  // everything except day

constexpr int kSceneHeight = 32;
constexpr int kSceneWidth = 64;

struct RectSpec {
    int x = 0, y = 0, w = 0, h = 0;
    int color_idx = 0;
};

struct BlobSpec {
    int cx = 0, cy = 0, rx = 1, ry = 1;
    int color_idx = 0;
};

// Seed-determined scene geometry. Rasterization tiles the full frame: sky
// above the horizon, road below, then buildings, vegetation and cars painted
// in that order.
struct SceneSpec {
    std::uint64_t seed = 0;
    int h = kSceneHeight, w = kSceneWidth;
    int horizon = 0;
    std::vector<RectSpec> buildings;
    std::vector<BlobSpec> vegetation;
    std::vector<RectSpec> cars;
};

struct SceneSample {
    Tensor image;  // (3, h, w), values in [-1, 1]
    ClassMap layout;
    Domain domain = Domain::day;
    std::uint64_t seed = 0;
};

SceneSpec generate_spec(std::uint64_t seed);
ClassMap rasterize(const SceneSpec& spec);
SceneSample render(const SceneSpec& spec, Domain domain);
SceneSample render_seed(std::uint64_t seed, Domain domain);

struct SeedRange {
    std::uint64_t start = 0;
    int count = 0;
    std::uint64_t end() const { return start + static_cast<std::uint64_t>(count); }
};

struct SplitConfig {
    int pretrain_count = 512;
    int adapt_count = 256;
    int eval_count_per_domain = 128;
    std::uint64_t seed_base = 1000;
    Domain source_domain = Domain::day;
    // Explicit range starts; when unset, ranges are laid out contiguously
    // from seed_base and cannot overlap.
    std::optional<std::uint64_t> pretrain_start;
    std::optional<std::uint64_t> adapt_start;
    std::optional<std::uint64_t> eval_start;
};

struct SplitManifest {
    Domain source_domain = Domain::day;
    SeedRange pretrain;
    SeedRange adapt_source;
    std::map<Domain, SeedRange> eval_target;
};

struct Splits {
    std::vector<SceneSample> pretrain;                      // spans all domains
    std::vector<SceneSample> adapt_source;                  // source domain only
    std::map<Domain, std::vector<SceneSample>> eval_target;  // unseen specs per target
    SplitManifest manifest;
};

// Seed arithmetic only; validates counts and range disjointness without
// rendering anything. Stages that may only touch part of the world (the
// zero-shot adaptation stage in particular) combine this with the renderers
// below instead of materializing every split.
SplitManifest make_split_manifest(const SplitConfig& cfg);

std::vector<SceneSample> render_pretrain_split(const SplitManifest& m);  // round-robin domains
std::vector<SceneSample> render_adapt_split(const SplitManifest& m);     // source domain only
std::map<Domain, std::vector<SceneSample>> render_eval_split(const SplitManifest& m);

// Seed ranges of the three splits are disjoint, which is what keeps the
// adaptation task zero-shot: no target-domain render of an adaptation or
// evaluation spec ever enters pretraining or training.
Splits make_splits(const SplitConfig& cfg);

}  // namespace zodi
