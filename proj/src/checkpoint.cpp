// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "zodi/rng.hpp"

namespace zodi {

namespace {

constexpr char kMagic[4] = {'Z', 'D', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void append_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint32_t take_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t take_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<double>& params) {
    std::vector<unsigned char> buf;
    buf.reserve(header.size() + params.size() * 8 + 32);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    append_u32(buf, kVersion);
    append_u32(buf, static_cast<std::uint32_t>(header.size()));
    buf.insert(buf.end(), header.begin(), header.end());
    for (double d : params) append_u64(buf, std::bit_cast<std::uint64_t>(d));
    // Checksum covers version, header length, header and payload.
    std::uint64_t sum = fnv1a64(buf.data() + 4, buf.size() - 4);
    append_u64(buf, sum);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(path.string() + ": write failed");
}

struct RawCheckpoint {
    nlohmann::json header;
    std::vector<double> params;
};

RawCheckpoint read_file(const std::filesystem::path& path, const std::string& expect_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(path.string() + ": cannot open for reading");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 24 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw CheckpointError(path.string() + ": not a checkpoint file");
    if (take_u32(buf.data() + 4) != kVersion)
        throw CheckpointError(path.string() + ": unsupported checkpoint version");
    const std::size_t header_len = take_u32(buf.data() + 8);
    if (buf.size() < 12 + header_len + 8)
        throw CheckpointError(path.string() + ": truncated checkpoint");

    const std::size_t body = buf.size() - 8;
    std::uint64_t want = take_u64(buf.data() + body);
    std::uint64_t got = fnv1a64(buf.data() + 4, body - 4);
    if (want != got) throw CheckpointError(path.string() + ": checksum mismatch");

    RawCheckpoint raw;
    try {
        raw.header = nlohmann::json::parse(buf.begin() + 12, buf.begin() + 12 + static_cast<long>(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": bad header: " + e.what());
    }
    if (raw.header.value("kind", "") != expect_kind)
        throw CheckpointError(path.string() + ": expected a " + expect_kind + " checkpoint");

    const std::size_t payload = body - 12 - header_len;
    if (payload % 8 != 0) throw CheckpointError(path.string() + ": malformed payload");
    raw.params.resize(payload / 8);
    for (std::size_t i = 0; i < raw.params.size(); ++i)
        raw.params[i] = std::bit_cast<double>(take_u64(buf.data() + 12 + header_len + 8 * i));
    return raw;
}

void check_param_count(const std::filesystem::path& path, std::size_t got, std::size_t want) {
    if (got != want)
        throw CheckpointError(path.string() + ": parameter count " + std::to_string(got) +
                              " does not match the stored config (" + std::to_string(want) + ")");
}

}  // namespace

void save_denoiser(const std::filesystem::path& path, const Denoiser& model) {
    const DenoiserConfig& c = model.config();
    nlohmann::json header = {
        {"kind", "denoiser"},
        {"init_seed", model.init_seed()},
        {"trained", model.is_trained()},
        {"config",
         {{"t_steps", c.t_steps},
          {"image_channels", c.image_channels},
          {"base_channels", c.base_channels},
          {"emb_dim", c.emb_dim},
          {"num_domains", c.num_domains},
          {"num_classes", c.num_classes}}},
    };
    write_file(path, header.dump(), model.param_data());
}

Denoiser load_denoiser(const std::filesystem::path& path) {
    RawCheckpoint raw = read_file(path, "denoiser");
    DenoiserConfig c;
    try {
        const auto& j = raw.header.at("config");
        c.t_steps = j.at("t_steps").get<int>();
        c.image_channels = j.at("image_channels").get<int>();
        c.base_channels = j.at("base_channels").get<int>();
        c.emb_dim = j.at("emb_dim").get<int>();
        c.num_domains = j.at("num_domains").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        Denoiser model(c, raw.header.at("init_seed").get<std::uint64_t>());
        check_param_count(path, raw.params.size(), model.param_data().size());
        model.param_data() = std::move(raw.params);
        model.mark_trained(raw.header.at("trained").get<bool>());
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": bad header: " + e.what());
    }
}

void save_segmodel(const std::filesystem::path& path, const SegModel& model) {
    const SegConfig& c = model.config();
    nlohmann::json header = {
        {"kind", "segmodel"},
        {"init_seed", model.init_seed()},
        {"config", {{"image_channels", c.image_channels}, {"num_classes", c.num_classes}}},
    };
    write_file(path, header.dump(), model.param_data());
}

SegModel load_segmodel(const std::filesystem::path& path) {
    RawCheckpoint raw = read_file(path, "segmodel");
    SegConfig c;
    try {
        const auto& j = raw.header.at("config");
        c.image_channels = j.at("image_channels").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        SegModel model(c, raw.header.at("init_seed").get<std::uint64_t>());
        check_param_count(path, raw.params.size(), model.param_data().size());
        model.param_data() = std::move(raw.params);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": bad header: " + e.what());
    }
}

}  // namespace zodi
