// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "zodi/checkpoint.hpp"
#include "zodi/diffusion.hpp"
#include "zodi/image_io.hpp"
#include "zodi/rng.hpp"
#include "zodi/runconfig.hpp"
#include "zodi/scene.hpp"

using namespace zodi;

namespace {

namespace fs = std::filesystem;

// Fresh scratch directory per test binary run.
fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "zodi_test_io";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Tensor random_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(3, h, w);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("quantization endpoints, rounding and saturation") {
    CHECK(quantize_unit(-1.0) == 0);
    CHECK(quantize_unit(1.0) == 255);
    CHECK(quantize_unit(0.0) == 128);  // 127.5 rounds up
    CHECK(quantize_unit(-3.0) == 0);
    CHECK(quantize_unit(7.5) == 255);
    CHECK(dequantize_unit(0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(dequantize_unit(255) == doctest::Approx(1.0).epsilon(1e-15));

    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        double v = rng.uniform(-1.0, 1.0);
        double back = dequantize_unit(quantize_unit(v));
        CHECK(std::abs(back - v) <= 1.0 / 255.0 + 1e-12);
        // Bytes are fixed points of the dequantize/quantize pair.
        CHECK(quantize_unit(back) == quantize_unit(v));
    }
}

TEST_CASE("ppm write/read round-trips to the quantization grid") {
    Tensor img = random_image(5, 7, 42);
    fs::path p = scratch() / "roundtrip.ppm";
    write_ppm(p, img);
    Tensor back = read_ppm(p);
    REQUIRE(back.channels() == 3);
    REQUIRE(back.height() == 5);
    REQUIRE(back.width() == 7);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 7; ++x)
                CHECK(back.at(c, y, x) == dequantize_unit(quantize_unit(img.at(c, y, x))));

    SUBCASE("rewrites are byte-identical") {
        fs::path q = scratch() / "roundtrip2.ppm";
        write_ppm(q, img);
        CHECK(slurp(p) == slurp(q));
    }
    SUBCASE("a second read/write cycle is lossless") {
        fs::path q = scratch() / "roundtrip3.ppm";
        write_ppm(q, back);
        CHECK(slurp(p) == slurp(q));
    }
}

TEST_CASE("ppm rejects bad inputs and bad files") {
    CHECK_THROWS_AS(write_ppm(scratch() / "bad.ppm", Tensor(1, 2, 2)), std::invalid_argument);
    CHECK_THROWS_AS(read_ppm(scratch() / "does_not_exist.ppm"), std::runtime_error);

    fs::path p = scratch() / "ok.ppm";
    write_ppm(p, random_image(4, 4, 7));
    auto bytes = slurp(p);

    SUBCASE("wrong magic") {
        auto bad = bytes;
        bad[1] = '5';
        spit(scratch() / "magic.ppm", bad);
        CHECK_THROWS_AS(read_ppm(scratch() / "magic.ppm"), std::runtime_error);
    }
    SUBCASE("truncated pixels") {
        auto bad = bytes;
        bad.resize(bytes.size() - 5);
        spit(scratch() / "short.ppm", bad);
        CHECK_THROWS_AS(read_ppm(scratch() / "short.ppm"), std::runtime_error);
    }
}

TEST_CASE("pgm round-trips class maps exactly") {
    ClassMap map(6, 9);
    Rng rng(3);
    for (auto& v : map.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 4));
    fs::path p = scratch() / "map.pgm";
    write_pgm(p, map);
    CHECK(read_pgm(p, 5) == map);

    SUBCASE("out-of-range ids are rejected at read time") {
        map.at(0, 0) = 7;
        write_pgm(p, map);
        CHECK_THROWS_AS(read_pgm(p, 5), std::runtime_error);
        CHECK(read_pgm(p, 8) == map);
    }
    SUBCASE("num_classes must be positive") {
        CHECK_THROWS_AS(read_pgm(p, 0), std::invalid_argument);
    }
}

TEST_CASE("contact sheet geometry places pairs under a gutter grid") {
    std::vector<Tensor> top, bottom;
    for (int i = 0; i < 3; ++i) {
        top.push_back(Tensor(3, 4, 6, 0.25 * (i + 1)));
        bottom.push_back(Tensor(3, 4, 6, -0.25 * (i + 1)));
    }
    Tensor sheet = contact_sheet(top, bottom, 2);
    // Two columns, two rows of cells; each cell is 2*4+2 tall and 6 wide,
    // with 2-pixel gutters around everything.
    REQUIRE(sheet.height() == 2 * 10 + 3 * 2);
    REQUIRE(sheet.width() == 2 * 6 + 3 * 2);
    CHECK(sheet.at(0, 0, 0) == 1.0);
    CHECK(sheet.at(1, 11, 8) == 1.0);
    // First pair occupies the top-left cell: top image then its partner.
    CHECK(sheet.at(0, 2, 2) == 0.25);
    CHECK(sheet.at(0, 2 + 4 + 2, 2) == -0.25);
    // Third pair wraps to the second row, first column.
    CHECK(sheet.at(0, 2 + 10 + 2, 2) == 0.75);

    CHECK_THROWS_AS(contact_sheet({}, {}, 4), std::invalid_argument);
    CHECK_THROWS_AS(contact_sheet(top, {top[0]}, 4), std::invalid_argument);
    std::vector<Tensor> odd = bottom;
    odd[1] = Tensor(3, 5, 6);
    CHECK_THROWS_AS(contact_sheet(top, odd, 4), std::invalid_argument);
    CHECK_THROWS_AS(contact_sheet(top, bottom, 0), std::invalid_argument);
}

TEST_CASE("series plots are deterministic and draw within the canvas") {
    std::vector<double> series = {1.0, 0.5, 0.25, 0.12, 0.2, 0.05};
    Tensor a = plot_series(series);
    Tensor b = plot_series(series);
    CHECK(a == b);
    REQUIRE(a.channels() == 3);
    REQUIRE(a.height() == 120);
    REQUIRE(a.width() == 240);

    int line_pixels = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (a.at(0, y, x) == -0.8 && a.at(2, y, x) == 0.9) ++line_pixels;
    CHECK(line_pixels >= a.width() - 2 * 6);  // a polyline spans the plot area

    SUBCASE("flat and single-point series still render") {
        CHECK_NOTHROW(plot_series({0.7, 0.7, 0.7}));
        CHECK_NOTHROW(plot_series({0.7}));
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(plot_series({}), std::invalid_argument);
        CHECK_THROWS_AS(plot_series({1.0}, 4, 500), std::invalid_argument);
    }
}

TEST_CASE("denoiser checkpoints survive a save/load cycle bit for bit") {
    DenoiserConfig cfg;
    cfg.base_channels = 4;
    cfg.emb_dim = 4;
    cfg.t_steps = 10;
    Denoiser model(cfg, 31);
    for (std::size_t i = 0; i < model.param_data().size(); ++i)
        model.param_data()[i] = 0.01 * static_cast<double>(i % 97) - 0.3;
    model.mark_trained(true);

    fs::path p = scratch() / "denoiser.ckpt";
    save_denoiser(p, model);
    Denoiser back = load_denoiser(p);
    CHECK(back.config() == cfg);
    CHECK(back.init_seed() == 31);
    CHECK(back.is_trained());
    CHECK(back.param_data() == model.param_data());

    SceneSample s = render_seed(5, Domain::day);
    Conditioning cond;
    cond.layout = s.layout;
    auto sched = build_schedule(10, ScheduleKind::cosine);
    Tensor z = forward_noising(s.image, 5, Tensor(3, 32, 64, 0.1), sched);
    CHECK(back.predict(z, 5, cond) == model.predict(z, 5, cond));

    SUBCASE("saving twice produces identical bytes") {
        fs::path q = scratch() / "denoiser2.ckpt";
        save_denoiser(q, model);
        CHECK(slurp(p) == slurp(q));
    }
}

TEST_CASE("segmodel checkpoints round-trip and keep the init seed") {
    SegConfig cfg;
    SegModel model(cfg, 99);
    model.param_data()[17] = 1.25;
    fs::path p = scratch() / "seg.ckpt";
    save_segmodel(p, model);
    SegModel back = load_segmodel(p);
    CHECK(back.config() == cfg);
    CHECK(back.init_seed() == 99);
    CHECK(back.param_data() == model.param_data());
}

TEST_CASE("checkpoint integrity failures are detected") {
    DenoiserConfig cfg;
    cfg.base_channels = 4;
    cfg.emb_dim = 4;
    cfg.t_steps = 10;
    Denoiser model(cfg, 1);
    fs::path p = scratch() / "victim.ckpt";
    save_denoiser(p, model);
    auto bytes = slurp(p);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_denoiser(scratch() / "nope.ckpt"), CheckpointError);
    }
    SUBCASE("bad magic") {
        auto bad = bytes;
        bad[0] = 'X';
        spit(p, bad);
        CHECK_THROWS_AS(load_denoiser(p), CheckpointError);
    }
    SUBCASE("flipped payload byte") {
        auto bad = bytes;
        bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
        spit(p, bad);
        CHECK_THROWS_AS(load_denoiser(p), CheckpointError);
    }
    SUBCASE("truncation") {
        auto bad = bytes;
        bad.resize(bad.size() - 9);
        spit(p, bad);
        CHECK_THROWS_AS(load_denoiser(p), CheckpointError);
    }
    SUBCASE("kind mismatch") {
        SegModel seg((SegConfig()), 1);
        fs::path q = scratch() / "seg_kind.ckpt";
        save_segmodel(q, seg);
        CHECK_THROWS_AS(load_denoiser(q), CheckpointError);
        CHECK_THROWS_AS(load_segmodel(p), CheckpointError);
    }
}

TEST_CASE("run config defaults round-trip through json text") {
    RunConfig cfg;
    std::string text = cfg.to_json_text();
    RunConfig back = RunConfig::from_json_text(text, "inline");
    CHECK(back.to_json_text() == text);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.trainer.seeds == cfg.trainer.seeds);
    CHECK(back.denoiser.schedule == ScheduleKind::cosine);
}

TEST_CASE("run config parsing is strict") {
    SUBCASE("missing schema version") {
        CHECK_THROWS_WITH_AS(RunConfig::from_json_text("{}", "x"),
                             doctest::Contains("schema_version"), ConfigError);
    }
    SUBCASE("wrong schema version") {
        CHECK_THROWS_AS(RunConfig::from_json_text(R"({"schema_version": 2})", "x"), ConfigError);
    }
    SUBCASE("invalid json") {
        CHECK_THROWS_AS(RunConfig::from_json_text("{", "x"), ConfigError);
    }
    SUBCASE("unknown top-level key names the offender") {
        CHECK_THROWS_WITH_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "wat": 3})", "x"),
            doctest::Contains("wat"), ConfigError);
    }
    SUBCASE("unknown nested key includes the path") {
        CHECK_THROWS_WITH_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "trainer": {"lrr": 0.1}})", "x"),
            doctest::Contains("trainer.lrr"), ConfigError);
    }
    SUBCASE("wrong field type") {
        CHECK_THROWS_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "trainer": {"epochs": "many"}})",
                                      "x"),
            ConfigError);
    }
    SUBCASE("bad enum value") {
        CHECK_THROWS_AS(
            RunConfig::from_json_text(
                R"({"schema_version": 1, "denoiser": {"schedule": "quadratic"}})", "x"),
            ConfigError);
    }
    SUBCASE("semantic validation runs") {
        CHECK_THROWS_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "trainer": {"seeds": []}})", "x"),
            ConfigError);
        CHECK_THROWS_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "trainer": {"seeds": [1, 1]}})",
                                      "x"),
            ConfigError);
        CHECK_THROWS_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "transfer": {"strength": 1.5}})",
                                      "x"),
            ConfigError);
        CHECK_THROWS_AS(
            RunConfig::from_json_text(R"({"schema_version": 1, "out_dir": ""})", "x"),
            ConfigError);
    }
}

TEST_CASE("transfer section substitutes per-domain default strengths") {
    RunConfig cfg;
    CHECK(cfg.transfer.make_transfer_config(Domain::night).strength ==
          default_strength(Domain::night));
    CHECK(cfg.transfer.make_transfer_config(Domain::fog).strength == default_strength(Domain::fog));
    cfg.transfer.strength = 0.5;
    CHECK(cfg.transfer.make_transfer_config(Domain::night).strength == 0.5);
}

TEST_CASE("output root honors the environment override") {
    fs::path root = scratch() / "out_root";
    fs::create_directories(root);
    REQUIRE(setenv("ZODI_OUT_ROOT", root.c_str(), 1) == 0);
    CHECK(output_root() == root);

    RunConfig cfg;
    cfg.out_dir = "exp1";
    CHECK(resolve_out_dir(cfg) == root / "exp1");
    cfg.out_dir = (scratch() / "abs_dir").string();
    CHECK(resolve_out_dir(cfg) == scratch() / "abs_dir");

    REQUIRE(unsetenv("ZODI_OUT_ROOT") == 0);
    CHECK(output_root() == fs::current_path());
}

TEST_CASE("config echo lands beside the artifacts and reparses") {
    RunConfig cfg;
    cfg.master_seed = 77;
    fs::path dir = scratch() / "echo_run";
    write_config_echo(cfg, dir);
    RunConfig back = RunConfig::from_file(dir / "config_echo.json");
    CHECK(back.master_seed == 77);
    CHECK(back.to_json_text() == cfg.to_json_text());
}
