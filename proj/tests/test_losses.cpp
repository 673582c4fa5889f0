// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "zodi/errors.hpp"
#include "zodi/losses.hpp"
#include "zodi/rng.hpp"
#include "zodi/segmodel.hpp"

using namespace zodi;

namespace {

// Six-parameter backbone, small enough to sweep every parameter with central
// finite differences. Features mix the image's first and second moments;
// logits are per-pixel scalings of the first channel.
class TinyBackbone final : public SegBackbone {
 public:
    explicit TinyBackbone(std::vector<double> p) : params_(std::move(p)) {}

    int num_classes() const override { return 2; }
    int feature_dim() const override { return 2; }
    int num_params() const override { return 6; }
    std::vector<double>& param_data() override { return params_; }
    const std::vector<double>& param_data() const override { return params_; }

    Eval eval(const Tensor& image, nn::Tape* tape) const override {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < image.size(); ++i) {
            s1 += image[i];
            s2 += image[i] * image[i];
        }
        Eval out;
        out.features = {params_[0] * s1 + params_[1] * s2, params_[2] * s1 + params_[3]};
        out.logits = Tensor(2, image.height(), image.width());
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                const double v = image.at(0, y, x);
                out.logits.at(0, y, x) = params_[4] * v;
                out.logits.at(1, y, x) = params_[5] * v * v;
            }
        }
        if (tape) tape->push(image);
        return out;
    }

    void backward(const std::vector<double>& gfeat, const Tensor& glogits, nn::Tape& tape,
                  double* grad) const override {
        const Tensor image = tape.pop();
        if (!gfeat.empty()) {
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < image.size(); ++i) {
                s1 += image[i];
                s2 += image[i] * image[i];
            }
            grad[0] += gfeat[0] * s1;
            grad[1] += gfeat[0] * s2;
            grad[2] += gfeat[1] * s1;
            grad[3] += gfeat[1];
        }
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                const double v = image.at(0, y, x);
                grad[4] += glogits.at(0, y, x) * v;
                grad[5] += glogits.at(1, y, x) * v * v;
            }
        }
    }

 private:
    std::vector<double> params_;
};

// Fixture backbone for the headline arithmetic: features chosen to make the
// similarity term exactly 0.4, logits chosen to make each task term 0.5.
class CraftedBackbone final : public SegBackbone {
 public:
    int num_classes() const override { return 2; }
    int feature_dim() const override { return 2; }
    int num_params() const override { return 0; }
    std::vector<double>& param_data() override { return params_; }
    const std::vector<double>& param_data() const override { return params_; }

    Eval eval(const Tensor& image, nn::Tape*) const override {
        Eval out;
        out.features = image[0] >= 0.5 ? std::vector<double>{1.0, 0.0}
                                       : std::vector<double>{0.6, 0.8};
        out.logits = Tensor(2, image.height(), image.width());
        // CE against label 0 becomes ln(1 + e^d) = 0.5 with this d.
        out.logits.at(1, 0, 0) = std::log(std::exp(0.5) - 1.0);
        return out;
    }
    void backward(const std::vector<double>&, const Tensor&, nn::Tape&,
                  double*) const override {}

 private:
    std::vector<double> params_;
};

class ZeroFeatures final : public SegBackbone {
 public:
    int num_classes() const override { return 2; }
    int feature_dim() const override { return 2; }
    int num_params() const override { return 0; }
    std::vector<double>& param_data() override { return params_; }
    const std::vector<double>& param_data() const override { return params_; }
    Eval eval(const Tensor& image, nn::Tape*) const override {
        return {{0.0, 0.0}, Tensor(2, image.height(), image.width())};
    }
    void backward(const std::vector<double>&, const Tensor&, nn::Tape&,
                  double*) const override {}

 private:
    std::vector<double> params_;
};

Tensor random_image(Rng& rng, int c, int h, int w) {
    Tensor t(c, h, w);
    fill_normal(t, rng);
    scale(t, 0.5);
    return t;
}

}  // namespace

TEST_CASE("sim_loss fixtures") {
    const std::vector<double> a{0.3, -1.2, 2.0};
    CHECK(sim_loss(a, a) == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> neg = a;
    for (auto& v : neg) v = -v;
    CHECK(sim_loss(a, neg) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK(sim_loss({1.0, 0.0}, {0.0, 1.0}) == 1.0);
}

TEST_CASE("sim_loss scale invariance, symmetry, and range over random pairs") {
    Rng rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> f1(16), f2(16);
        for (auto& v : f1) v = rng.normal();
        for (auto& v : f2) v = rng.normal();
        const double s = sim_loss(f1, f2);
        CHECK(s >= 0.0);
        CHECK(s <= 2.0);
        CHECK(std::abs(s - sim_loss(f2, f1)) <= 1e-10);

        const double alpha = std::exp(rng.uniform(-2.0, 2.0));
        const double beta = std::exp(rng.uniform(-2.0, 2.0));
        std::vector<double> g1 = f1, g2 = f2;
        for (auto& v : g1) v *= alpha;
        for (auto& v : g2) v *= beta;
        CHECK(std::abs(sim_loss(g1, g2) - s) <= 1e-10);
    }
}

TEST_CASE("sim_loss error cases") {
    CHECK_THROWS_AS(sim_loss({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(sim_loss({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(sim_loss({0.0, 0.0}, {1.0, 2.0}), DegenerateInputError);
    CHECK_THROWS_AS(sim_loss({1.0, 2.0}, {0.0, 0.0}), DegenerateInputError);
}

TEST_CASE("cross entropy fixed values") {
    SUBCASE("uniform logits give ln(num_classes)") {
        Tensor logits(5, 2, 2, 0.7);
        ClassMap y(2, 2);
        y.at(0, 1) = 3;
        y.at(1, 0) = 4;
        CHECK(cross_entropy(logits, y) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
    }
    SUBCASE("confident correct logits give near zero") {
        Tensor logits(5, 2, 2);
        ClassMap y(2, 2);
        y.at(0, 0) = 2;
        y.at(1, 1) = 4;
        for (int yy = 0; yy < 2; ++yy)
            for (int xx = 0; xx < 2; ++xx) logits.at(y.at(yy, xx), yy, xx) = 25.0;
        CHECK(cross_entropy(logits, y) < 1e-9);
    }
    SUBCASE("large logits stay finite") {
        Tensor logits(3, 1, 1);
        logits.at(0, 0, 0) = 5000.0;
        logits.at(1, 0, 0) = 4000.0;
        ClassMap y(1, 1);
        y.at(0, 0) = 1;
        const double ce = cross_entropy(logits, y);
        CHECK(std::isfinite(ce));
        CHECK(ce == doctest::Approx(1000.0).epsilon(1e-10));
    }
    SUBCASE("validation") {
        Tensor logits(2, 2, 2);
        ClassMap bad(2, 2);
        bad.at(0, 0) = 3;
        CHECK_THROWS_AS(cross_entropy(logits, bad), std::invalid_argument);
        CHECK_THROWS_AS(cross_entropy(logits, ClassMap(3, 2)), std::invalid_argument);
    }
}

TEST_CASE("task loss sums two cross entropies against the original map") {
    Rng rng(5);
    TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
    const Tensor im1 = random_image(rng, 1, 2, 3);
    const Tensor im2 = random_image(rng, 1, 2, 3);
    ClassMap y(2, 3);
    y.at(0, 1) = 1;
    y.at(1, 2) = 1;

    const double t = task_loss(m, im1, im2, y);
    const double a = cross_entropy(m.eval(im1, nullptr).logits, y);
    const double b = cross_entropy(m.eval(im2, nullptr).logits, y);
    CHECK(t == doctest::Approx(a + b).epsilon(1e-14));
    CHECK_THROWS_AS(task_loss(m, im1, random_image(rng, 1, 2, 4), y), std::invalid_argument);
}

TEST_CASE("combined loss arithmetic") {
    SUBCASE("crafted fixture: sim 0.4, task 1.0, lambda 0.1 gives 1.04") {
        CraftedBackbone m;
        Tensor i1(1, 1, 1), i2(1, 1, 1);
        i1[0] = 1.0;
        ClassMap y(1, 1);
        LossBreakdown lb = zodi_loss(m, i1, i2, y, 0.1);
        CHECK(lb.sim == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(lb.task == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(lb.total == doctest::Approx(1.04).epsilon(1e-12));
    }
    SUBCASE("identical images zero out the similarity term") {
        TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
        Rng rng(9);
        const Tensor im = random_image(rng, 1, 2, 3);
        LossBreakdown lb = zodi_loss(m, im, im, ClassMap(2, 3), 0.1);
        CHECK(lb.sim < 1e-12);
        CHECK(std::abs(lb.total - lb.task) < 1e-12);
    }
    SUBCASE("lambda zero reduces exactly to the task loss") {
        TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
        Rng rng(10);
        const Tensor a = random_image(rng, 1, 2, 3);
        const Tensor b = random_image(rng, 1, 2, 3);
        LossBreakdown lb = zodi_loss(m, a, b, ClassMap(2, 3), 0.0);
        CHECK(lb.total == lb.task);
        CHECK(lb.sim > 0.0);  // still reported for the ablation log
    }
    SUBCASE("total is linear in lambda") {
        TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
        Rng rng(11);
        const Tensor a = random_image(rng, 1, 2, 3);
        const Tensor b = random_image(rng, 1, 2, 3);
        const ClassMap y(2, 3);
        const LossBreakdown l0 = zodi_loss(m, a, b, y, 0.0);
        for (double lam : {0.1, 0.5, 1.0, 3.0}) {
            const LossBreakdown l = zodi_loss(m, a, b, y, lam);
            CHECK(l.total == doctest::Approx(l0.task + lam * l0.sim).epsilon(1e-12));
            CHECK(l.total == doctest::Approx(l.lambda * l.sim + l.task).epsilon(1e-12));
        }
    }
    SUBCASE("negative lambda rejected") {
        TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
        CHECK_THROWS_AS(zodi_loss(m, Tensor(1, 2, 3), Tensor(1, 2, 3), ClassMap(2, 3), -0.1),
                        std::invalid_argument);
    }
}

TEST_CASE("combined loss on the real model satisfies the breakdown identity") {
    SegModel m(SegConfig{}, 8);
    Rng rng(21);
    const Tensor a = random_image(rng, 3, 8, 8);
    const Tensor b = random_image(rng, 3, 8, 8);
    ClassMap y(8, 8);
    for (auto& v : y.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 4));

    LossBreakdown lb = zodi_loss(m, a, b, y, 0.1);
    CHECK(lb.sim >= 0.0);
    CHECK(lb.sim <= 2.0);
    CHECK(lb.task >= 0.0);
    CHECK(std::abs(lb.total - (0.1 * lb.sim + lb.task)) < 1e-10);

    // Value path and gradient path agree on the reported numbers.
    std::vector<double> g(static_cast<std::size_t>(m.num_params()), 0.0);
    LossBreakdown lg = zodi_loss_grad(m, a, b, y, 0.1, g.data());
    CHECK(lg.task == lb.task);
    CHECK(lg.sim == lb.sim);
    CHECK(lg.total == lb.total);
}

TEST_CASE("loss gradients match central finite differences") {
    Rng rng(606);
    const Tensor a = random_image(rng, 1, 2, 3);
    const Tensor b = random_image(rng, 1, 2, 3);
    ClassMap y(2, 3);
    y.at(0, 0) = 1;
    y.at(1, 1) = 1;

    for (double lam : {0.0, 0.1, 1.0}) {
        CAPTURE(lam);
        TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});
        std::vector<double> g(6, 0.0);
        zodi_loss_grad(m, a, b, y, lam, g.data());

        auto& p = m.param_data();
        const double h = 1e-6;
        for (std::size_t i = 0; i < 6; ++i) {
            const double save = p[i];
            p[i] = save + h;
            const double lp = zodi_loss(m, a, b, y, lam).total;
            p[i] = save - h;
            const double lm = zodi_loss(m, a, b, y, lam).total;
            p[i] = save;
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i])) < 1e-4);
        }
    }
}

TEST_CASE("gradient accumulates rather than overwrites") {
    Rng rng(44);
    const Tensor a = random_image(rng, 1, 2, 3);
    const Tensor b = random_image(rng, 1, 2, 3);
    const ClassMap y(2, 3);
    TinyBackbone m({0.3, -0.2, 0.5, 0.7, 0.9, -0.4});

    std::vector<double> once(6, 0.0), twice(6, 0.0);
    zodi_loss_grad(m, a, b, y, 0.1, once.data());
    zodi_loss_grad(m, a, b, y, 0.1, twice.data());
    zodi_loss_grad(m, a, b, y, 0.1, twice.data());
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}

TEST_CASE("degenerate features are rejected with a dedicated error") {
    ZeroFeatures m;
    CHECK_THROWS_AS(zodi_loss(m, Tensor(1, 2, 2), Tensor(1, 2, 2), ClassMap(2, 2), 0.1),
                    DegenerateInputError);
    std::vector<double> grad(1, 0.0);
    CHECK_THROWS_AS(
        zodi_loss_grad(m, Tensor(1, 2, 2), Tensor(1, 2, 2), ClassMap(2, 2), 0.1, grad.data()),
        DegenerateInputError);
}
