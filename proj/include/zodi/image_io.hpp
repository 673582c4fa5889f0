// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "zodi/classmap.hpp"
#include "zodi/tensor.hpp"

// Binary PPM/PGM readers and writers plus the two renderings the reporting
// layer needs: contact sheets of image pairs and loss-curve plots. The
// formats are deliberately bare so artifacts stay inspectable with any image
// viewer and diffable byte-for-byte.

namespace zodi {

// Quantization law for [-1, 1] image values; out-of-range inputs saturate.
unsigned char quantize_unit(double v);
double dequantize_unit(unsigned char b);

// 8-bit binary PPM (P6). Requires a 3-channel tensor; values are quantized
// with quantize_unit, so write/read round-trips to the quantization grid.
void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

// 8-bit binary PGM (P5) holding raw class ids, one byte per pixel.
void write_pgm(const std::filesystem::path& path, const ClassMap& map);
ClassMap read_pgm(const std::filesystem::path& path, int num_classes);

// Grid image pairing top[i] above bottom[i], wrapped at max_cols columns and
// separated by white gutters. All entries must share one 3-channel shape.
Tensor contact_sheet(const std::vector<Tensor>& top, const std::vector<Tensor>& bottom,
                     int max_cols = 8);

// Line plot of a scalar series on a white canvas with an auto-scaled range;
// useful for loss curves. Returns a 3-channel image in [-1, 1].
Tensor plot_series(const std::vector<double>& values, int h = 120, int w = 240);

}  // namespace zodi
