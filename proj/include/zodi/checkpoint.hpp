// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "zodi/denoiser.hpp"
#include "zodi/segmodel.hpp"

// Single binary checkpoint format for both model kinds: a fixed magic, a
// format version, a JSON header carrying the config and seeds, the raw
// parameter vector, and a trailing checksum over everything between magic
// and checksum. Loading rebuilds the model from its config and restores the
// exact parameters, so a reloaded model is indistinguishable from the saved
// one.

namespace zodi {

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

void save_denoiser(const std::filesystem::path& path, const Denoiser& model);
Denoiser load_denoiser(const std::filesystem::path& path);

void save_segmodel(const std::filesystem::path& path, const SegModel& model);
SegModel load_segmodel(const std::filesystem::path& path);

}  // namespace zodi
