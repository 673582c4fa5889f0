// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zodi::nn {

Tensor Tape::pop() {
    if (tensors.empty()) throw std::logic_error("Tape: tensor stack underflow");
    Tensor t = std::move(tensors.back());
    tensors.pop_back();
    return t;
}

std::vector<double> Tape::pop_vec() {
    if (vecs.empty()) throw std::logic_error("Tape: vector stack underflow");
    std::vector<double> v = std::move(vecs.back());
    vecs.pop_back();
    return v;
}

void Tape::clear() {
    tensors.clear();
    vecs.clear();
}

void Conv2d::init(Rng& rng, double* p) const {
    const int fan_in = in_c * ksize * ksize;
    const double std_dev = std::sqrt(2.0 / fan_in);
    double* w = p + w_off;
    for (int i = 0; i < out_c * in_c * ksize * ksize; ++i) w[i] = std_dev * rng.normal();
    double* b = p + b_off;
    for (int i = 0; i < out_c; ++i) b[i] = 0.0;
}

Tensor Conv2d::forward(const Tensor& x, const double* p, Tape* tape) const {
    if (x.channels() != in_c) throw std::invalid_argument("Conv2d: channel mismatch");
    const int h = x.height(), w = x.width();
    const int oh = out_dim(h), ow = out_dim(w);
    Tensor y(out_c, oh, ow);

    const double* wt = p + w_off;
    const double* bias = p + b_off;
    for (int oc = 0; oc < out_c; ++oc) {
        double* yc = y.channel(oc);
        const double bv = bias[oc];
        for (int i = 0; i < oh * ow; ++i) yc[i] = bv;
        for (int ic = 0; ic < in_c; ++ic) {
            const double* xc = x.channel(ic);
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    const double wv = wt[((oc * in_c + ic) * ksize + ky) * ksize + kx];
                    if (wv == 0.0) continue;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* xrow = xc + static_cast<std::size_t>(iy) * w;
                        double* yrow = yc + static_cast<std::size_t>(oy) * ow;
                        // valid ox range so that ix = ox*stride - pad + kx stays in [0, w)
                        int ox0 = 0;
                        while (ox0 * stride - pad + kx < 0) ++ox0;
                        int ox1 = ow - 1;
                        while (ox1 >= 0 && ox1 * stride - pad + kx >= w) --ox1;
                        const double* xp = xrow + (ox0 * stride - pad + kx);
                        if (stride == 1) {
                            for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += wv * xp[ox - ox0];
                        } else {
                            for (int ox = ox0; ox <= ox1; ++ox)
                                yrow[ox] += wv * xrow[ox * stride - pad + kx];
                        }
                    }
                }
            }
        }
    }
    if (tape) tape->push(x);
    return y;
}

Tensor Conv2d::backward(const Tensor& gy, const double* p, double* g, Tape& tape,
                        bool need_gx) const {
    const Tensor x = tape.pop();
    const int h = x.height(), w = x.width();
    const int oh = gy.height(), ow = gy.width();

    const double* wt = p + w_off;
    double* gw = g + w_off;
    double* gb = g + b_off;
    Tensor gx = need_gx ? Tensor(in_c, h, w) : Tensor();

    for (int oc = 0; oc < out_c; ++oc) {
        const double* gyc = gy.channel(oc);
        double acc_b = 0.0;
        for (int i = 0; i < oh * ow; ++i) acc_b += gyc[i];
        gb[oc] += acc_b;

        for (int ic = 0; ic < in_c; ++ic) {
            const double* xc = x.channel(ic);
            double* gxc = need_gx ? gx.channel(ic) : nullptr;
            for (int ky = 0; ky < ksize; ++ky) {
                for (int kx = 0; kx < ksize; ++kx) {
                    const int widx = ((oc * in_c + ic) * ksize + ky) * ksize + kx;
                    const double wv = wt[widx];
                    double acc_w = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* xrow = xc + static_cast<std::size_t>(iy) * w;
                        const double* gyrow = gyc + static_cast<std::size_t>(oy) * ow;
                        double* gxrow = need_gx ? gxc + static_cast<std::size_t>(iy) * w : nullptr;
                        int ox0 = 0;
                        while (ox0 * stride - pad + kx < 0) ++ox0;
                        int ox1 = ow - 1;
                        while (ox1 >= 0 && ox1 * stride - pad + kx >= w) --ox1;
                        for (int ox = ox0; ox <= ox1; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            const double gv = gyrow[ox];
                            acc_w += xrow[ix] * gv;
                            if (need_gx) gxrow[ix] += wv * gv;
                        }
                    }
                    gw[widx] += acc_w;
                }
            }
        }
    }
    return gx;
}

void Dense::init(Rng& rng, double* p) const {
    const double std_dev = std::sqrt(2.0 / in_dim);
    double* w = p + w_off;
    for (int i = 0; i < in_dim * out_dim; ++i) w[i] = std_dev * rng.normal();
    double* b = p + b_off;
    for (int i = 0; i < out_dim; ++i) b[i] = 0.0;
}

std::vector<double> Dense::forward(const std::vector<double>& x, const double* p,
                                   Tape* tape) const {
    if (static_cast<int>(x.size()) != in_dim) throw std::invalid_argument("Dense: dim mismatch");
    const double* w = p + w_off;
    const double* b = p + b_off;
    std::vector<double> y(out_dim);
    for (int o = 0; o < out_dim; ++o) {
        double acc = b[o];
        const double* wrow = w + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
    if (tape) tape->push_vec(x);
    return y;
}

std::vector<double> Dense::backward(const std::vector<double>& gy, const double* p, double* g,
                                    Tape& tape) const {
    const std::vector<double> x = tape.pop_vec();
    const double* w = p + w_off;
    double* gw = g + w_off;
    double* gb = g + b_off;
    std::vector<double> gx(in_dim, 0.0);
    for (int o = 0; o < out_dim; ++o) {
        const double gv = gy[o];
        gb[o] += gv;
        const double* wrow = w + static_cast<std::size_t>(o) * in_dim;
        double* gwrow = gw + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            gwrow[i] += gv * x[i];
            gx[i] += wrow[i] * gv;
        }
    }
    return gx;
}

Tensor silu(const Tensor& x, Tape* tape) {
    Tensor y = Tensor::zeros_like(x);
    const double* xd = x.data();
    double* yd = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xd[i]));
        yd[i] = xd[i] * s;
    }
    if (tape) tape->push(x);
    return y;
}

Tensor silu_backward(const Tensor& gy, Tape& tape) {
    const Tensor x = tape.pop();
    Tensor gx = Tensor::zeros_like(x);
    const double* xd = x.data();
    const double* gd = gy.data();
    double* od = gx.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xd[i]));
        od[i] = gd[i] * s * (1.0 + xd[i] * (1.0 - s));
    }
    return gx;
}

Tensor nearest_up2(const Tensor& x) {
    Tensor y(x.channels(), x.height() * 2, x.width() * 2);
    for (int c = 0; c < x.channels(); ++c)
        for (int yy = 0; yy < y.height(); ++yy)
            for (int xx = 0; xx < y.width(); ++xx) y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

Tensor nearest_up2_backward(const Tensor& gy) {
    Tensor gx(gy.channels(), gy.height() / 2, gy.width() / 2);
    for (int c = 0; c < gy.channels(); ++c)
        for (int yy = 0; yy < gy.height(); ++yy)
            for (int xx = 0; xx < gy.width(); ++xx) gx.at(c, yy / 2, xx / 2) += gy.at(c, yy, xx);
    return gx;
}

namespace {

// half-pixel source mapping for factor-2 upsampling with edge clamp
void up2_coords(int out_i, int in_dim, int& i0, int& i1, double& frac) {
    double f = (out_i + 0.5) / 2.0 - 0.5;
    if (f < 0.0) f = 0.0;
    i0 = static_cast<int>(f);
    if (i0 > in_dim - 1) i0 = in_dim - 1;
    i1 = std::min(i0 + 1, in_dim - 1);
    frac = f - i0;
}

}  // namespace

Tensor bilinear_up2(const Tensor& x) {
    const int h = x.height(), w = x.width();
    Tensor y(x.channels(), h * 2, w * 2);
    for (int c = 0; c < x.channels(); ++c) {
        for (int oy = 0; oy < 2 * h; ++oy) {
            int y0, y1;
            double fy;
            up2_coords(oy, h, y0, y1, fy);
            for (int ox = 0; ox < 2 * w; ++ox) {
                int x0, x1;
                double fx;
                up2_coords(ox, w, x0, x1, fx);
                y.at(c, oy, ox) = (1 - fy) * ((1 - fx) * x.at(c, y0, x0) + fx * x.at(c, y0, x1)) +
                                  fy * ((1 - fx) * x.at(c, y1, x0) + fx * x.at(c, y1, x1));
            }
        }
    }
    return y;
}

Tensor bilinear_up2_backward(const Tensor& gy) {
    const int h = gy.height() / 2, w = gy.width() / 2;
    Tensor gx(gy.channels(), h, w);
    for (int c = 0; c < gy.channels(); ++c) {
        for (int oy = 0; oy < 2 * h; ++oy) {
            int y0, y1;
            double fy;
            up2_coords(oy, h, y0, y1, fy);
            for (int ox = 0; ox < 2 * w; ++ox) {
                int x0, x1;
                double fx;
                up2_coords(ox, w, x0, x1, fx);
                const double g = gy.at(c, oy, ox);
                gx.at(c, y0, x0) += (1 - fy) * (1 - fx) * g;
                gx.at(c, y0, x1) += (1 - fy) * fx * g;
                gx.at(c, y1, x0) += fy * (1 - fx) * g;
                gx.at(c, y1, x1) += fy * fx * g;
            }
        }
    }
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument("concat_channels: spatial mismatch");
    Tensor y(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.data(), a.data() + a.size(), y.data());
    std::copy(b.data(), b.data() + b.size(), y.data() + a.size());
    return y;
}

void split_channels(const Tensor& gy, int c_a, Tensor& ga, Tensor& gb) {
    ga = Tensor(c_a, gy.height(), gy.width());
    gb = Tensor(gy.channels() - c_a, gy.height(), gy.width());
    std::copy(gy.data(), gy.data() + ga.size(), ga.data());
    std::copy(gy.data() + ga.size(), gy.data() + gy.size(), gb.data());
}

Tensor add_channel_bias(const Tensor& x, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != x.channels())
        throw std::invalid_argument("add_channel_bias: channel mismatch");
    Tensor y = x;
    for (int c = 0; c < x.channels(); ++c) {
        double* yc = y.channel(c);
        const double b = v[c];
        for (int i = 0; i < x.height() * x.width(); ++i) yc[i] += b;
    }
    return y;
}

std::vector<double> channel_bias_backward(const Tensor& gy) {
    std::vector<double> gv(gy.channels(), 0.0);
    for (int c = 0; c < gy.channels(); ++c) {
        const double* gc = gy.channel(c);
        double acc = 0.0;
        for (int i = 0; i < gy.height() * gy.width(); ++i) acc += gc[i];
        gv[c] = acc;
    }
    return gv;
}

Tensor film(const Tensor& x, const std::vector<double>& gb, Tape* tape) {
    const int C = x.channels();
    if (static_cast<int>(gb.size()) != 2 * C)
        throw std::invalid_argument("film: expected 2C scale/shift values");
    Tensor y = x;
    for (int c = 0; c < C; ++c) {
        double* yc = y.channel(c);
        const double scale = 1.0 + gb[c];
        const double shift = gb[C + c];
        for (int i = 0; i < x.height() * x.width(); ++i) yc[i] = yc[i] * scale + shift;
    }
    if (tape) {
        tape->push(x);
        tape->push_vec(gb);
    }
    return y;
}

Tensor film_backward(const Tensor& gy, Tape& tape, std::vector<double>& g_gb) {
    const std::vector<double> gb = tape.pop_vec();
    const Tensor x = tape.pop();
    const int C = gy.channels();
    if (static_cast<int>(gb.size()) != 2 * C || x.channels() != C)
        throw std::invalid_argument("film_backward: tape shape mismatch");
    g_gb.assign(2 * C, 0.0);
    Tensor gx(C, gy.height(), gy.width());
    for (int c = 0; c < C; ++c) {
        const double* gc = gy.channel(c);
        const double* xc = x.channel(c);
        double* oc = gx.channel(c);
        const double scale = 1.0 + gb[c];
        double acc_scale = 0.0, acc_shift = 0.0;
        for (int i = 0; i < gy.height() * gy.width(); ++i) {
            acc_scale += gc[i] * xc[i];
            acc_shift += gc[i];
            oc[i] = gc[i] * scale;
        }
        g_gb[c] = acc_scale;
        g_gb[C + c] = acc_shift;
    }
    return gx;
}

std::vector<double> global_avg_pool(const Tensor& x) {
    std::vector<double> f(x.channels());
    const double inv = 1.0 / (static_cast<double>(x.height()) * x.width());
    for (int c = 0; c < x.channels(); ++c) {
        const double* xc = x.channel(c);
        double acc = 0.0;
        for (int i = 0; i < x.height() * x.width(); ++i) acc += xc[i];
        f[c] = acc * inv;
    }
    return f;
}

Tensor global_avg_pool_backward(const std::vector<double>& gfeat, int h, int w) {
    Tensor gx(static_cast<int>(gfeat.size()), h, w);
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (int c = 0; c < gx.channels(); ++c) {
        double* gc = gx.channel(c);
        const double v = gfeat[c] * inv;
        for (int i = 0; i < h * w; ++i) gc[i] = v;
    }
    return gx;
}

}  // namespace zodi::nn
