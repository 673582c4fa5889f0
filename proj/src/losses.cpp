// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zodi/errors.hpp"

namespace zodi {

namespace {

double vec_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void check_labels(const Tensor& logits, const ClassMap& y, const char* where) {
    if (y.h != logits.height() || y.w != logits.width())
        throw std::invalid_argument(std::string(where) + ": map shape does not match logits");
    if (!y.values_in_range(logits.channels()))
        throw std::invalid_argument(std::string(where) + ": class index out of range");
}

// Pixel-averaged CE; optionally writes d(CE)/d(logits) into glogits.
double ce_core(const Tensor& logits, const ClassMap& y, Tensor* glogits) {
    check_labels(logits, y, "cross_entropy");
    const int C = logits.channels(), H = logits.height(), W = logits.width();
    const double inv_n = 1.0 / (static_cast<double>(H) * W);
    if (glogits) *glogits = Tensor(C, H, W);

    double acc = 0.0;
    for (int yy = 0; yy < H; ++yy) {
        for (int xx = 0; xx < W; ++xx) {
            double mx = logits.at(0, yy, xx);
            for (int c = 1; c < C; ++c) mx = std::max(mx, logits.at(c, yy, xx));
            double sum = 0.0;
            for (int c = 0; c < C; ++c) sum += std::exp(logits.at(c, yy, xx) - mx);
            const double lse = mx + std::log(sum);
            const int label = y.at(yy, xx);
            acc += lse - logits.at(label, yy, xx);
            if (glogits) {
                for (int c = 0; c < C; ++c) {
                    double p = std::exp(logits.at(c, yy, xx) - lse);
                    glogits->at(c, yy, xx) = (p - (c == label ? 1.0 : 0.0)) * inv_n;
                }
            }
        }
    }
    return acc * inv_n;
}

// d(sim_loss)/d(f1); swap arguments for the other side.
std::vector<double> sim_grad_side(const std::vector<double>& f1, const std::vector<double>& f2,
                                  double n1, double n2, double dot) {
    std::vector<double> g(f1.size());
    const double inv = 1.0 / (n1 * n2);
    const double self = dot / (n1 * n1 * n1 * n2);
    for (std::size_t i = 0; i < f1.size(); ++i) g[i] = -f2[i] * inv + f1[i] * self;
    return g;
}

}  // namespace

double sim_loss(const std::vector<double>& f1, const std::vector<double>& f2) {
    if (f1.size() != f2.size())
        throw std::invalid_argument("sim_loss: feature lengths differ");
    if (f1.empty()) throw std::invalid_argument("sim_loss: empty feature vectors");
    const double n1 = vec_norm(f1), n2 = vec_norm(f2);
    if (n1 == 0.0 || n2 == 0.0)
        throw DegenerateInputError("sim_loss: zero feature vector, cosine undefined");
    const double cos = std::clamp(vec_dot(f1, f2) / (n1 * n2), -1.0, 1.0);
    return 1.0 - cos;
}

double cross_entropy(const Tensor& logits, const ClassMap& y) {
    return ce_core(logits, y, nullptr);
}

double task_loss(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                 const ClassMap& y) {
    check_same_shape(image, generated, "task_loss");
    const double a = ce_core(m.eval(image, nullptr).logits, y, nullptr);
    const double b = ce_core(m.eval(generated, nullptr).logits, y, nullptr);
    return a + b;
}

LossBreakdown zodi_loss(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                        const ClassMap& y, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("zodi_loss: lambda must be >= 0");
    check_same_shape(image, generated, "zodi_loss");

    auto ev1 = m.eval(image, nullptr);
    auto ev2 = m.eval(generated, nullptr);
    LossBreakdown lb;
    lb.lambda = lambda;
    lb.task = ce_core(ev1.logits, y, nullptr) + ce_core(ev2.logits, y, nullptr);
    lb.sim = sim_loss(ev1.features, ev2.features);
    lb.total = lambda * lb.sim + lb.task;
    return lb;
}

LossBreakdown zodi_loss_grad(const SegBackbone& m, const Tensor& image, const Tensor& generated,
                             const ClassMap& y, double lambda, double* grad) {
    if (lambda < 0.0) throw std::invalid_argument("zodi_loss: lambda must be >= 0");
    check_same_shape(image, generated, "zodi_loss");

    nn::Tape tape1, tape2;
    auto ev1 = m.eval(image, &tape1);
    auto ev2 = m.eval(generated, &tape2);

    LossBreakdown lb;
    lb.lambda = lambda;
    Tensor gl1, gl2;
    lb.task = ce_core(ev1.logits, y, &gl1) + ce_core(ev2.logits, y, &gl2);

    const double n1 = vec_norm(ev1.features), n2 = vec_norm(ev2.features);
    if (n1 == 0.0 || n2 == 0.0)
        throw DegenerateInputError("sim_loss: zero feature vector, cosine undefined");
    const double dot = vec_dot(ev1.features, ev2.features);
    lb.sim = 1.0 - std::clamp(dot / (n1 * n2), -1.0, 1.0);
    lb.total = lambda * lb.sim + lb.task;

    std::vector<double> gf1, gf2;
    if (lambda > 0.0) {
        gf1 = sim_grad_side(ev1.features, ev2.features, n1, n2, dot);
        gf2 = sim_grad_side(ev2.features, ev1.features, n2, n1, dot);
        for (auto& v : gf1) v *= lambda;
        for (auto& v : gf2) v *= lambda;
    }
    m.backward(gf2, gl2, tape2, grad);
    m.backward(gf1, gl1, tape1, grad);
    return lb;
}

}  // namespace zodi
