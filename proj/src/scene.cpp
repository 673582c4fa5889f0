// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "zodi/rng.hpp"

namespace zodi {

const char* domain_name(Domain d) {
    switch (d) {
        case Domain::day: return "day";
        case Domain::night: return "night";
        case Domain::snow: return "snow";
        case Domain::rain: return "rain";
        case Domain::fog: return "fog";
        case Domain::game: return "game";
    }
    throw std::invalid_argument("domain_name: bad domain value");
}

Domain domain_from_name(const std::string& name) {
    for (int i = 0; i < kNumDomains; ++i) {
        Domain d = static_cast<Domain>(i);
        if (name == domain_name(d)) return d;
    }
    throw std::invalid_argument("unknown domain name: " + name);
}

std::vector<Domain> target_domains() {
    return {Domain::night, Domain::snow, Domain::rain, Domain::fog, Domain::game};
}

SceneSpec generate_spec(std::uint64_t seed) {
    Rng r(derive_seed(seed, 0x5ce9eULL));
    SceneSpec s;
    s.seed = seed;
    s.horizon = r.uniform_int(11, 16);

    int n_b = r.uniform_int(2, 4);
    for (int i = 0; i < n_b; ++i) {
        RectSpec b;
        b.w = r.uniform_int(6, 14);
        b.x = r.uniform_int(0, s.w - b.w);
        b.h = r.uniform_int(5, s.horizon - 2);
        b.y = s.horizon - b.h;
        b.color_idx = r.uniform_int(0, 3);
        s.buildings.push_back(b);
    }

    int n_v = r.uniform_int(2, 4);
    for (int i = 0; i < n_v; ++i) {
        BlobSpec v;
        v.rx = r.uniform_int(2, 5);
        v.ry = r.uniform_int(2, 4);
        v.cx = r.uniform_int(0, s.w - 1);
        v.cy = r.uniform_int(s.horizon - 4, s.horizon + 1);
        v.color_idx = r.uniform_int(0, 2);
        s.vegetation.push_back(v);
    }

    int n_c = r.uniform_int(2, 4);
    for (int i = 0; i < n_c; ++i) {
        RectSpec c;
        c.w = r.uniform_int(6, 10);
        c.h = r.uniform_int(3, 5);
        c.y = r.uniform_int(s.horizon + 2, s.h - c.h - 1);
        c.x = r.uniform_int(0, s.w - c.w);
        c.color_idx = r.uniform_int(0, 4);
        s.cars.push_back(c);
    }
    return s;
}

namespace {

void paint_rect(ClassMap& m, const RectSpec& r, SceneClass cls) {
    int y0 = std::max(0, r.y), y1 = std::min(m.h, r.y + r.h);
    int x0 = std::max(0, r.x), x1 = std::min(m.w, r.x + r.w);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.at(y, x) = static_cast<std::uint8_t>(cls);
}

void paint_blob(ClassMap& m, const BlobSpec& b, SceneClass cls) {
    for (int y = std::max(0, b.cy - b.ry); y <= std::min(m.h - 1, b.cy + b.ry); ++y) {
        for (int x = std::max(0, b.cx - b.rx); x <= std::min(m.w - 1, b.cx + b.rx); ++x) {
            double dy = (y - b.cy) / static_cast<double>(b.ry);
            double dx = (x - b.cx) / static_cast<double>(b.rx);
            if (dx * dx + dy * dy <= 1.0) m.at(y, x) = static_cast<std::uint8_t>(cls);
        }
    }
}

// Deterministic per-pixel noise in [0, 1), independent of any RNG stream.
double hash01(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(a ^ mix64(b ^ mix64(c + 0x9e3779b97f4a7c15ULL)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double hash_pm(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return 2.0 * hash01(a, b, c) - 1.0;
}

struct Rgb {
    double r, g, b;
};

constexpr std::array<Rgb, 4> kBuildingPalette = {{
    {0.55, 0.45, 0.38},
    {0.60, 0.58, 0.55},
    {0.48, 0.42, 0.50},
    {0.66, 0.52, 0.42},
}};

constexpr std::array<Rgb, 5> kCarPalette = {{
    {0.75, 0.15, 0.12},
    {0.15, 0.30, 0.70},
    {0.80, 0.78, 0.20},
    {0.85, 0.85, 0.88},
    {0.20, 0.60, 0.30},
}};

constexpr std::array<Rgb, 3> kVegPalette = {{
    {0.18, 0.48, 0.22},
    {0.24, 0.55, 0.26},
    {0.14, 0.42, 0.18},
}};

}  // namespace

ClassMap rasterize(const SceneSpec& spec) {
    if (spec.h <= 0 || spec.w <= 0) throw std::invalid_argument("rasterize: empty spec");
    if (spec.horizon <= 0 || spec.horizon >= spec.h)
        throw std::invalid_argument("rasterize: horizon out of frame");
    ClassMap m(spec.h, spec.w);
    for (int y = 0; y < spec.h; ++y)
        for (int x = 0; x < spec.w; ++x)
            m.at(y, x) = static_cast<std::uint8_t>(y < spec.horizon ? SceneClass::sky
                                                                    : SceneClass::road);
    for (const auto& b : spec.buildings) paint_rect(m, b, SceneClass::building);
    for (const auto& v : spec.vegetation) paint_blob(m, v, SceneClass::vegetation);
    for (const auto& c : spec.cars) paint_rect(m, c, SceneClass::car);
    return m;
}

namespace {

Rgb base_color(const SceneSpec& spec, const ClassMap& m, int y, int x) {
    auto cls = static_cast<SceneClass>(m.at(y, x));
    switch (cls) {
        case SceneClass::sky: {
            double t = y / std::max(1.0, static_cast<double>(spec.horizon));
            return {0.50 + 0.10 * t, 0.68 + 0.08 * t, 0.92};
        }
        case SceneClass::road: {
            double t = (y - spec.horizon) / std::max(1.0, static_cast<double>(spec.h - spec.horizon));
            double v = 0.40 - 0.10 * t;
            return {v, v, v + 0.02};
        }
        case SceneClass::building: {
            int idx = 0;
            for (const auto& b : spec.buildings)
                if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) idx = b.color_idx;
            return kBuildingPalette[static_cast<std::size_t>(idx)];
        }
        case SceneClass::car: {
            int idx = 0;
            for (const auto& c : spec.cars)
                if (x >= c.x && x < c.x + c.w && y >= c.y && y < c.y + c.h) idx = c.color_idx;
            return kCarPalette[static_cast<std::size_t>(idx)];
        }
        case SceneClass::vegetation: {
            int idx = 0;
            for (const auto& v : spec.vegetation) {
                double dy = (y - v.cy) / static_cast<double>(v.ry);
                double dx = (x - v.cx) / static_cast<double>(v.rx);
                if (dx * dx + dy * dy <= 1.0) idx = v.color_idx;
            }
            return kVegPalette[static_cast<std::size_t>(idx)];
        }
    }
    throw std::logic_error("base_color: bad class");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SceneSample render(const SceneSpec& spec, Domain domain) {
    ClassMap layout = rasterize(spec);
    Tensor img(3, spec.h, spec.w);

    std::uint64_t px_key = derive_seed(spec.seed, 0x7e11);
    std::uint64_t dm_key = derive_seed(spec.seed, 0xd037, static_cast<std::uint64_t>(domain));

    for (int y = 0; y < spec.h; ++y) {
        for (int x = 0; x < spec.w; ++x) {
            Rgb c = base_color(spec, layout, y, x);
            std::uint64_t pk = px_key + static_cast<std::uint64_t>(y) * 4096u + static_cast<std::uint64_t>(x);
            // Mild per-pixel texture shared by every domain of the same spec.
            double tex = 0.04 * hash_pm(pk, 11, 0);
            double r = c.r + tex, g = c.g + tex, b = c.b + tex;
            auto cls = static_cast<SceneClass>(layout.at(y, x));

            switch (domain) {
                case Domain::day:
                    break;
                case Domain::night: {
                    r = r * 0.20;
                    g = g * 0.22;
                    b = b * 0.26 + 0.05;
                    double sensor = 0.05;
                    r += sensor * hash_pm(dm_key, pk, 1);
                    g += sensor * hash_pm(dm_key, pk, 2);
                    b += sensor * hash_pm(dm_key, pk, 3);
                    break;
                }
                case Domain::snow: {
                    if (cls == SceneClass::road || cls == SceneClass::vegetation) {
                        r = 0.35 * r + 0.65 * 0.92;
                        g = 0.35 * g + 0.65 * 0.93;
                        b = 0.35 * b + 0.65 * 0.95;
                    }
                    double gray = (r + g + b) / 3.0;
                    r = 0.75 * r + 0.25 * gray + 0.06;
                    g = 0.75 * g + 0.25 * gray + 0.06;
                    b = 0.75 * b + 0.25 * gray + 0.07;
                    if (hash01(dm_key, pk, 4) < 0.06) { r = 0.95; g = 0.95; b = 0.97; }
                    break;
                }
                case Domain::rain: {
                    r = 0.55 * (r - 0.5) + 0.47;
                    g = 0.55 * (g - 0.5) + 0.47;
                    b = 0.55 * (b - 0.5) + 0.49;
                    // Diagonal streaks: same phase for pixels along x + 2y.
                    std::uint64_t lane = static_cast<std::uint64_t>(x + 2 * y) / 3u;
                    if (hash01(dm_key, lane, 5) < 0.22 && hash01(dm_key, pk, 6) < 0.5) {
                        r = 0.55 * r + 0.45 * 0.72;
                        g = 0.55 * g + 0.45 * 0.75;
                        b = 0.55 * b + 0.45 * 0.80;
                    }
                    break;
                }
                case Domain::fog: {
                    double depth = (y < spec.horizon)
                                       ? 1.0
                                       : std::exp(-(y - spec.horizon) / 9.0);
                    double f = 0.85 * depth;
                    r = (1.0 - f) * r + f * 0.78;
                    g = (1.0 - f) * g + f * 0.78;
                    b = (1.0 - f) * b + f * 0.80;
                    break;
                }
                case Domain::game: {
                    double gray = (r + g + b) / 3.0;
                    r = gray + 1.45 * (r - gray);
                    g = gray + 1.45 * (g - gray);
                    b = gray + 1.45 * (b - gray);
                    r = std::round(clamp01(r) * 5.0) / 5.0;
                    g = std::round(clamp01(g) * 5.0) / 5.0;
                    b = std::round(clamp01(b) * 5.0) / 5.0;
                    break;
                }
            }
            img.at(0, y, x) = 2.0 * clamp01(r) - 1.0;
            img.at(1, y, x) = 2.0 * clamp01(g) - 1.0;
            img.at(2, y, x) = 2.0 * clamp01(b) - 1.0;
        }
    }

    SceneSample out;
    out.image = std::move(img);
    out.layout = std::move(layout);
    out.domain = domain;
    out.seed = spec.seed;
    return out;
}

SceneSample render_seed(std::uint64_t seed, Domain domain) {
    return render(generate_spec(seed), domain);
}

namespace {

struct Range {
    std::uint64_t start;
    std::uint64_t end;  // exclusive
};

void check_disjoint(const std::vector<Range>& ranges) {
    for (std::size_t i = 0; i < ranges.size(); ++i)
        for (std::size_t j = i + 1; j < ranges.size(); ++j)
            if (ranges[i].start < ranges[j].end && ranges[j].start < ranges[i].end)
                throw std::invalid_argument("make_splits: seed ranges overlap");
}

}  // namespace

SplitManifest make_split_manifest(const SplitConfig& cfg) {
    if (cfg.pretrain_count <= 0 || cfg.adapt_count <= 0 || cfg.eval_count_per_domain <= 0)
        throw std::invalid_argument("make_splits: split sizes must be positive");

    auto pc = static_cast<std::uint64_t>(cfg.pretrain_count);
    auto ac = static_cast<std::uint64_t>(cfg.adapt_count);
    auto ec = static_cast<std::uint64_t>(cfg.eval_count_per_domain);
    std::vector<Domain> targets;
    for (int i = 0; i < kNumDomains; ++i)
        if (static_cast<Domain>(i) != cfg.source_domain) targets.push_back(static_cast<Domain>(i));

    std::uint64_t p0 = cfg.pretrain_start.value_or(cfg.seed_base);
    std::uint64_t a0 = cfg.adapt_start.value_or(p0 + pc);
    std::uint64_t e0 = cfg.eval_start.value_or(a0 + ac);

    std::vector<Range> ranges = {{p0, p0 + pc}, {a0, a0 + ac}};
    for (std::size_t i = 0; i < targets.size(); ++i)
        ranges.push_back({e0 + i * ec, e0 + (i + 1) * ec});
    check_disjoint(ranges);

    SplitManifest m;
    m.source_domain = cfg.source_domain;
    m.pretrain = {p0, cfg.pretrain_count};
    m.adapt_source = {a0, cfg.adapt_count};
    for (std::size_t di = 0; di < targets.size(); ++di)
        m.eval_target[targets[di]] = {e0 + di * ec, cfg.eval_count_per_domain};
    return m;
}

std::vector<SceneSample> render_pretrain_split(const SplitManifest& m) {
    std::vector<SceneSample> out;
    out.reserve(static_cast<std::size_t>(m.pretrain.count));
    for (int i = 0; i < m.pretrain.count; ++i) {
        auto d = static_cast<Domain>(i % kNumDomains);
        out.push_back(render_seed(m.pretrain.start + static_cast<std::uint64_t>(i), d));
    }
    return out;
}

std::vector<SceneSample> render_adapt_split(const SplitManifest& m) {
    std::vector<SceneSample> out;
    out.reserve(static_cast<std::size_t>(m.adapt_source.count));
    for (int i = 0; i < m.adapt_source.count; ++i)
        out.push_back(
            render_seed(m.adapt_source.start + static_cast<std::uint64_t>(i), m.source_domain));
    return out;
}

std::map<Domain, std::vector<SceneSample>> render_eval_split(const SplitManifest& m) {
    std::map<Domain, std::vector<SceneSample>> out;
    for (const auto& [domain, range] : m.eval_target) {
        auto& vec = out[domain];
        vec.reserve(static_cast<std::size_t>(range.count));
        for (int i = 0; i < range.count; ++i)
            vec.push_back(render_seed(range.start + static_cast<std::uint64_t>(i), domain));
    }
    return out;
}

Splits make_splits(const SplitConfig& cfg) {
    Splits out;
    out.manifest = make_split_manifest(cfg);
    out.pretrain = render_pretrain_split(out.manifest);
    out.adapt_source = render_adapt_split(out.manifest);
    out.eval_target = render_eval_split(out.manifest);
    return out;
}

}  // namespace zodi
