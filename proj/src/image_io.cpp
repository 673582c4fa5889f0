// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace zodi {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    return in;
}

// Reads one whitespace-delimited header token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int parse_dim(std::istream& in, const std::filesystem::path& path, const char* name) {
    std::string tok = next_token(in);
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(path, std::string("bad ") + name + " in header");
    }
}

}  // namespace

unsigned char quantize_unit(double v) {
    double clamped = std::clamp(v, -1.0, 1.0);
    return static_cast<unsigned char>(std::lround((clamped + 1.0) * 0.5 * 255.0));
}

double dequantize_unit(unsigned char b) { return static_cast<double>(b) / 255.0 * 2.0 - 1.0; }

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
    if (image.channels() != 3) throw std::invalid_argument("write_ppm: need a 3-channel image");
    std::ofstream out = open_out(path);
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width()) * 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    quantize_unit(image.at(c, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) fail(path, "write failed");
}

Tensor read_ppm(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    if (next_token(in) != "P6") fail(path, "not a binary PPM (P6)");
    int w = parse_dim(in, path, "width");
    int h = parse_dim(in, path, "height");
    if (parse_dim(in, path, "maxval") != 255) fail(path, "unsupported maxval");
    // The header terminator is the single whitespace already consumed by the
    // maxval token read.
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(path, "truncated pixel data");
    Tensor image(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                image.at(c, y, x) = dequantize_unit(
                    raw[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                         static_cast<std::size_t>(x)) *
                            3 +
                        static_cast<std::size_t>(c)]);
    return image;
}

void write_pgm(const std::filesystem::path& path, const ClassMap& map) {
    std::ofstream out = open_out(path);
    out << "P5\n" << map.w << ' ' << map.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(map.data.data()),
              static_cast<std::streamsize>(map.data.size()));
    if (!out) fail(path, "write failed");
}

ClassMap read_pgm(const std::filesystem::path& path, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("read_pgm: num_classes must be >= 1");
    std::ifstream in = open_in(path);
    if (next_token(in) != "P5") fail(path, "not a binary PGM (P5)");
    int w = parse_dim(in, path, "width");
    int h = parse_dim(in, path, "height");
    if (parse_dim(in, path, "maxval") != 255) fail(path, "unsupported maxval");
    ClassMap map(h, w);
    in.read(reinterpret_cast<char*>(map.data.data()), static_cast<std::streamsize>(map.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(map.data.size()))
        fail(path, "truncated pixel data");
    if (!map.values_in_range(num_classes)) fail(path, "class id out of range");
    return map;
}

namespace {

constexpr int kGutter = 2;

void blit(Tensor& canvas, const Tensor& tile, int y0, int x0) {
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < tile.height(); ++y)
            for (int x = 0; x < tile.width(); ++x)
                canvas.at(c, y0 + y, x0 + x) = std::clamp(tile.at(c, y, x), -1.0, 1.0);
}

}  // namespace

Tensor contact_sheet(const std::vector<Tensor>& top, const std::vector<Tensor>& bottom,
                     int max_cols) {
    if (top.empty() || top.size() != bottom.size())
        throw std::invalid_argument("contact_sheet: need equally many top and bottom images");
    if (max_cols < 1) throw std::invalid_argument("contact_sheet: max_cols must be >= 1");
    const int th = top[0].height(), tw = top[0].width();
    for (const auto& list : {top, bottom})
        for (const Tensor& t : list)
            if (t.channels() != 3 || t.height() != th || t.width() != tw)
                throw std::invalid_argument("contact_sheet: images must share one 3-channel shape");

    const int n = static_cast<int>(top.size());
    const int cols = std::min(max_cols, n);
    const int rows = (n + cols - 1) / cols;
    // Each grid cell stacks the pair vertically; gutters surround every cell.
    const int cell_h = 2 * th + kGutter;
    const int cell_w = tw;
    Tensor canvas(3, rows * cell_h + (rows + 1) * kGutter, cols * cell_w + (cols + 1) * kGutter,
                  1.0);
    for (int i = 0; i < n; ++i) {
        const int r = i / cols, c = i % cols;
        const int y0 = kGutter + r * (cell_h + kGutter);
        const int x0 = kGutter + c * (cell_w + kGutter);
        blit(canvas, top[static_cast<std::size_t>(i)], y0, x0);
        blit(canvas, bottom[static_cast<std::size_t>(i)], y0 + th + kGutter, x0);
    }
    return canvas;
}

Tensor plot_series(const std::vector<double>& values, int h, int w) {
    if (values.empty()) throw std::invalid_argument("plot_series: empty series");
    if (h < 16 || w < 16) throw std::invalid_argument("plot_series: canvas too small");
    Tensor canvas(3, h, w, 1.0);
    const int margin = 6;
    const int x0 = margin, x1 = w - 1 - margin;
    const int y0 = margin, y1 = h - 1 - margin;

    auto put = [&](int y, int x, double r, double g, double b) {
        if (y < 0 || y >= h || x < 0 || x >= w) return;
        canvas.at(0, y, x) = r;
        canvas.at(1, y, x) = g;
        canvas.at(2, y, x) = b;
    };
    for (int x = x0; x <= x1; ++x) {
        put(y1, x, -0.5, -0.5, -0.5);
        put(y0, x, 0.6, 0.6, 0.6);
    }
    for (int y = y0; y <= y1; ++y) {
        put(y, x0, -0.5, -0.5, -0.5);
        put(y, x1, 0.6, 0.6, 0.6);
    }

    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (hi - lo < 1e-12) {
        // A flat series still deserves a visible line in mid-canvas.
        lo -= 1.0;
        hi += 1.0;
    }
    auto to_y = [&](double v) {
        double frac = (v - lo) / (hi - lo);
        return y1 - static_cast<int>(std::lround(frac * (y1 - y0)));
    };
    auto to_x = [&](std::size_t i) {
        if (values.size() == 1) return (x0 + x1) / 2;
        double frac = static_cast<double>(i) / static_cast<double>(values.size() - 1);
        return x0 + static_cast<int>(std::lround(frac * (x1 - x0)));
    };

    // Connect consecutive points by stepping the longer axis one pixel at a
    // time; good enough for monitoring plots without an aa line rasterizer.
    for (std::size_t i = 0; i + 1 < values.size() || values.size() == 1; ++i) {
        int ax = to_x(i), ay = to_y(values[i]);
        int bx = values.size() == 1 ? ax : to_x(i + 1);
        int by = values.size() == 1 ? ay : to_y(values[i + 1]);
        int steps = std::max({std::abs(bx - ax), std::abs(by - ay), 1});
        for (int s = 0; s <= steps; ++s) {
            int x = ax + (bx - ax) * s / steps;
            int y = ay + (by - ay) * s / steps;
            put(y, x, -0.8, -0.2, 0.9);
        }
        if (values.size() == 1) break;
    }
    return canvas;
}

}  // namespace zodi
