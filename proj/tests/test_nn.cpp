// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "zodi/nn.hpp"
#include "zodi/rng.hpp"
#include "zodi/tensor.hpp"

using namespace zodi;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

double dot(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Central-difference gradient of a scalar loss over a flat parameter vector,
// compared element by element against the analytic gradient.
void check_fd(std::vector<double>& params, const std::vector<double>& analytic,
              const std::function<double()>& loss, double tol = 1e-6) {
    const double h = 1e-6;
    REQUIRE(params.size() == analytic.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double keep = params[i];
        params[i] = keep + h;
        double lp = loss();
        params[i] = keep - h;
        double lm = loss();
        params[i] = keep;
        double fd = (lp - lm) / (2.0 * h);
        INFO("param index ", i, " fd=", fd, " analytic=", analytic[i]);
        CHECK(rel_err(fd, analytic[i]) < tol);
    }
}

void fill_vec(std::vector<double>& v, Rng& r, double s = 0.5) {
    for (auto& x : v) x = s * r.normal();
}

}  // namespace

TEST_CASE("conv2d forward matches a direct per-pixel convolution") {
    const std::tuple<int, int, int> cases[] = {{1, 1, 3}, {2, 1, 3}, {1, 0, 1}};
    for (auto [stride, pad, k] : cases) {
        nn::Conv2d conv{2, 3, k, stride, pad, 0, 0};
        conv.b_off = conv.out_c * conv.in_c * k * k;
        std::vector<double> p(static_cast<std::size_t>(conv.param_count()));
        Rng r(17);
        fill_vec(p, r);
        Tensor x(2, 6, 8);
        fill_normal(x, r);
        Tensor y = conv.forward(x, p.data(), nullptr);
        REQUIRE(y.channels() == 3);
        REQUIRE(y.height() == conv.out_dim(6));
        REQUIRE(y.width() == conv.out_dim(8));

        for (int oc = 0; oc < 3; ++oc) {
            for (int oy = 0; oy < y.height(); ++oy) {
                for (int ox = 0; ox < y.width(); ++ox) {
                    double acc = p[static_cast<std::size_t>(conv.b_off + oc)];
                    for (int ic = 0; ic < 2; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                int iy = oy * stride + ky - pad;
                                int ix = ox * stride + kx - pad;
                                if (iy < 0 || iy >= 6 || ix < 0 || ix >= 8) continue;
                                acc += p[static_cast<std::size_t>(((oc * 2 + ic) * k + ky) * k + kx)] *
                                       x.at(ic, iy, ix);
                            }
                    CHECK(y.at(oc, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    const std::tuple<int, int, int> cases[] = {{1, 1, 3}, {2, 1, 3}, {1, 0, 1}};
    for (auto [stride, pad, k] : cases) {
        CAPTURE(stride);
        nn::Conv2d conv{2, 3, k, stride, pad, 0, 0};
        conv.b_off = conv.out_c * conv.in_c * k * k;
        std::vector<double> p(static_cast<std::size_t>(conv.param_count()));
        Rng r(23);
        fill_vec(p, r);
        Tensor x(2, 4, 6);
        fill_normal(x, r);
        Tensor w(3, conv.out_dim(4), conv.out_dim(6));
        fill_normal(w, r);

        nn::Tape tape;
        Tensor y = conv.forward(x, p.data(), &tape);
        std::vector<double> g(p.size(), 0.0);
        Tensor gx = conv.backward(w, p.data(), g.data(), tape);

        check_fd(p, g, [&] { return dot(conv.forward(x, p.data(), nullptr), w); });

        const double h = 1e-6;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double keep = x[i];
            x[i] = keep + h;
            double lp = dot(conv.forward(x, p.data(), nullptr), w);
            x[i] = keep - h;
            double lm = dot(conv.forward(x, p.data(), nullptr), w);
            x[i] = keep;
            CHECK(rel_err((lp - lm) / (2.0 * h), gx[i]) < 1e-6);
        }
    }
}

TEST_CASE("dense gradients match finite differences") {
    nn::Dense d{4, 3, 0, 12};
    std::vector<double> p(static_cast<std::size_t>(d.param_count()));
    Rng r(31);
    fill_vec(p, r);
    std::vector<double> x(4), w(3);
    fill_vec(x, r, 1.0);
    fill_vec(w, r, 1.0);

    auto loss = [&] {
        auto y = d.forward(x, p.data(), nullptr);
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += w[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
        return acc;
    };

    nn::Tape tape;
    d.forward(x, p.data(), &tape);
    std::vector<double> g(p.size(), 0.0);
    auto gx = d.backward(w, p.data(), g.data(), tape);
    check_fd(p, g, loss);

    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double lp = loss();
        x[i] = keep - h;
        double lm = loss();
        x[i] = keep;
        CHECK(rel_err((lp - lm) / (2.0 * h), gx[i]) < 1e-6);
    }
}

TEST_CASE("silu gradient matches finite differences") {
    Rng r(41);
    Tensor x(2, 3, 3), w(2, 3, 3);
    fill_normal(x, r);
    fill_normal(w, r);

    nn::Tape tape;
    nn::silu(x, &tape);
    Tensor gx = nn::silu_backward(w, tape);

    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double lp = dot(nn::silu(x, nullptr), w);
        x[i] = keep - h;
        double lm = dot(nn::silu(x, nullptr), w);
        x[i] = keep;
        CHECK(rel_err((lp - lm) / (2.0 * h), gx[i]) < 1e-6);
    }
}

TEST_CASE("silu values are x*sigmoid(x)") {
    Tensor x(1, 1, 3);
    x[0] = 0.0;
    x[1] = 2.0;
    x[2] = -3.0;
    Tensor y = nn::silu(x, nullptr);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == doctest::Approx(2.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(y[2] == doctest::Approx(-3.0 / (1.0 + std::exp(3.0))).epsilon(1e-15));
}

TEST_CASE("upsamplers satisfy the adjoint identity") {
    Rng r(51);
    Tensor x(3, 4, 5);
    fill_normal(x, r);

    SUBCASE("nearest") {
        Tensor y(3, 8, 10);
        fill_normal(y, r);
        CHECK(dot(nn::nearest_up2(x), y) ==
              doctest::Approx(dot(x, nn::nearest_up2_backward(y))).epsilon(1e-12));
    }
    SUBCASE("bilinear") {
        Tensor y(3, 8, 10);
        fill_normal(y, r);
        CHECK(dot(nn::bilinear_up2(x), y) ==
              doctest::Approx(dot(x, nn::bilinear_up2_backward(y))).epsilon(1e-12));
    }
}

TEST_CASE("bilinear upsample interpolates with half-pixel centers") {
    Tensor x(1, 1, 2);
    x[0] = 1.0;
    x[1] = 3.0;
    Tensor y = nn::bilinear_up2(x);
    REQUIRE(y.height() == 2);
    REQUIRE(y.width() == 4);
    for (int row = 0; row < 2; ++row) {
        CHECK(y.at(0, row, 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(y.at(0, row, 1) == doctest::Approx(0.75 * 1.0 + 0.25 * 3.0).epsilon(1e-15));
        CHECK(y.at(0, row, 2) == doctest::Approx(0.25 * 1.0 + 0.75 * 3.0).epsilon(1e-15));
        CHECK(y.at(0, row, 3) == doctest::Approx(3.0).epsilon(1e-15));
    }
}

TEST_CASE("nearest upsample duplicates pixels") {
    Tensor x(1, 2, 2);
    x[0] = 1.0;
    x[1] = 2.0;
    x[2] = 3.0;
    x[3] = 4.0;
    Tensor y = nn::nearest_up2(x);
    CHECK(y.at(0, 0, 0) == 1.0);
    CHECK(y.at(0, 0, 1) == 1.0);
    CHECK(y.at(0, 1, 1) == 1.0);
    CHECK(y.at(0, 0, 2) == 2.0);
    CHECK(y.at(0, 3, 3) == 4.0);
    CHECK(y.at(0, 2, 0) == 3.0);
}

TEST_CASE("concat and split are inverse") {
    Rng r(61);
    Tensor a(2, 3, 4), b(3, 3, 4);
    fill_normal(a, r);
    fill_normal(b, r);
    Tensor c = nn::concat_channels(a, b);
    REQUIRE(c.channels() == 5);
    Tensor ga, gb;
    nn::split_channels(c, 2, ga, gb);
    CHECK(ga == a);
    CHECK(gb == b);
    Tensor mismatched(2, 4, 4);
    CHECK_THROWS_AS(nn::concat_channels(a, mismatched), std::invalid_argument);
}

TEST_CASE("channel bias add and its backward are adjoint") {
    Rng r(71);
    Tensor x(4, 3, 5), gy(4, 3, 5);
    fill_normal(x, r);
    fill_normal(gy, r);
    std::vector<double> v(4);
    fill_vec(v, r, 1.0);

    Tensor y = nn::add_channel_bias(x, v);
    for (int c = 0; c < 4; ++c)
        CHECK(y.at(c, 1, 2) == doctest::Approx(x.at(c, 1, 2) + v[static_cast<std::size_t>(c)]).epsilon(1e-15));

    auto gv = nn::channel_bias_backward(gy);
    double lhs = 0.0;
    for (int c = 0; c < 4; ++c) lhs += gv[static_cast<std::size_t>(c)] * v[static_cast<std::size_t>(c)];
    // <gy, broadcast(v)> == <channel_sum(gy), v>
    Tensor zeros(4, 3, 5);
    CHECK(lhs == doctest::Approx(dot(gy, nn::add_channel_bias(zeros, v))).epsilon(1e-12));
}

TEST_CASE("film applies per-channel scale and shift") {
    Rng r(75);
    Tensor x(3, 2, 4);
    fill_normal(x, r);
    std::vector<double> gb(6);
    fill_vec(gb, r, 0.5);

    Tensor y = nn::film(x, gb, nullptr);
    for (int c = 0; c < 3; ++c)
        CHECK(y.at(c, 1, 2) == doctest::Approx(x.at(c, 1, 2) * (1.0 + gb[static_cast<std::size_t>(c)]) +
                                               gb[static_cast<std::size_t>(3 + c)])
                                   .epsilon(1e-15));

    SUBCASE("zero modulation is the identity") {
        CHECK(nn::film(x, std::vector<double>(6, 0.0), nullptr) == x);
    }
    SUBCASE("wrong modulation length throws") {
        CHECK_THROWS_AS(nn::film(x, std::vector<double>(5, 0.0), nullptr), std::invalid_argument);
    }
}

TEST_CASE("film gradients match finite differences") {
    Rng r(76);
    Tensor x(2, 3, 3), w(2, 3, 3);
    fill_normal(x, r);
    fill_normal(w, r);
    std::vector<double> gb(4);
    fill_vec(gb, r, 0.7);

    nn::Tape tape;
    nn::film(x, gb, &tape);
    std::vector<double> g_gb;
    Tensor gx = nn::film_backward(w, tape, g_gb);

    const double h = 1e-6;
    auto loss = [&] { return dot(nn::film(x, gb, nullptr), w); };
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double lp = loss();
        x[i] = keep - h;
        double lm = loss();
        x[i] = keep;
        CHECK(rel_err((lp - lm) / (2.0 * h), gx[i]) < 1e-6);
    }
    for (std::size_t i = 0; i < gb.size(); ++i) {
        double keep = gb[i];
        gb[i] = keep + h;
        double lp = loss();
        gb[i] = keep - h;
        double lm = loss();
        gb[i] = keep;
        CHECK(rel_err((lp - lm) / (2.0 * h), g_gb[i]) < 1e-6);
    }
}

TEST_CASE("global average pool computes channel means and is adjoint") {
    Rng r(81);
    Tensor x(2, 3, 4);
    fill_normal(x, r);
    auto f = nn::global_avg_pool(x);
    double m0 = 0.0;
    for (int y = 0; y < 3; ++y)
        for (int xx = 0; xx < 4; ++xx) m0 += x.at(0, y, xx);
    CHECK(f[0] == doctest::Approx(m0 / 12.0).epsilon(1e-12));

    std::vector<double> gf(2);
    fill_vec(gf, r, 1.0);
    Tensor gx = nn::global_avg_pool_backward(gf, 3, 4);
    double lhs = gf[0] * f[0] + gf[1] * f[1];
    CHECK(lhs == doctest::Approx(dot(gx, x)).epsilon(1e-12));
}

TEST_CASE("tape underflow throws") {
    nn::Tape tape;
    CHECK_THROWS_AS(tape.pop(), std::logic_error);
    CHECK_THROWS_AS(tape.pop_vec(), std::logic_error);
}
