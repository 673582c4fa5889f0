// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zodi/rng.hpp"

namespace zodi {

// Dense (channels, height, width) array of doubles. All images, latents and
// noise tensors in this project use this layout.
class Tensor {
public:
    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : c_(c), h_(h), w_(w), data_(static_cast<std::size_t>(c) * h * w, fill) {
        if (c < 0 || h < 0 || w < 0) throw std::invalid_argument("Tensor: negative dimension");
    }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.c_, t.h_, t.w_); }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

    double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }
    const double* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool operator==(const Tensor& o) const {
        return c_ == o.c_ && h_ == o.h_ && w_ == o.w_ && data_ == o.data_;
    }

private:
    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

// y += s * x
inline void axpy(double s, const Tensor& x, Tensor& y) {
    check_same_shape(x, y, "axpy");
    double* yd = y.data();
    const double* xd = x.data();
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] += s * xd[i];
}

inline void scale(Tensor& t, double s) {
    double* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) d[i] *= s;
}

inline void clamp(Tensor& t, double lo, double hi) {
    double* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) d[i] = d[i] < lo ? lo : (d[i] > hi ? hi : d[i]);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double mean_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mean_abs_diff");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return a.size() ? s / static_cast<double>(a.size()) : 0.0;
}

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
    return std::sqrt(s);
}

inline bool all_finite(const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i])) return false;
    return true;
}

inline void fill_normal(Tensor& t, Rng& rng) {
    double* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) d[i] = rng.normal();
}

inline std::uint64_t content_hash(const Tensor& t) {
    std::uint64_t h = fnv1a64(t.data(), t.size() * sizeof(double));
    const int dims[3] = {t.channels(), t.height(), t.width()};
    return fnv1a64(dims, sizeof(dims), h);
}

}  // namespace zodi
