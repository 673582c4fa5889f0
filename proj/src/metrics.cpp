// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#include "zodi/metrics.hpp"

#include <stdexcept>
#include <string>

namespace zodi {

double miou(const std::vector<ClassMap>& preds, const std::vector<ClassMap>& gts,
            int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("miou: num_classes must be >= 1");
    if (preds.empty()) throw std::invalid_argument("miou: empty input");
    if (preds.size() != gts.size())
        throw std::invalid_argument("miou: prediction and ground-truth counts differ");

    auto n = static_cast<std::size_t>(num_classes);
    std::vector<long long> conf(n * n, 0);  // conf[gt * n + pred]
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const ClassMap& p = preds[i];
        const ClassMap& g = gts[i];
        if (p.h != g.h || p.w != g.w)
            throw std::invalid_argument("miou: shape mismatch at pair " + std::to_string(i));
        if (!p.values_in_range(num_classes) || !g.values_in_range(num_classes))
            throw std::invalid_argument("miou: class id out of range at pair " + std::to_string(i));
        for (std::size_t k = 0; k < p.data.size(); ++k)
            ++conf[static_cast<std::size_t>(g.data[k]) * n + p.data[k]];
    }

    double acc = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < n; ++c) {
        long long tp = conf[c * n + c];
        long long row = 0, col = 0;
        for (std::size_t j = 0; j < n; ++j) {
            row += conf[c * n + j];  // ground truth c
            col += conf[j * n + c];  // predicted c
        }
        long long uni = row + col - tp;
        if (uni == 0) continue;  // class absent everywhere
        acc += static_cast<double>(tp) / static_cast<double>(uni);
        ++present;
    }
    return present == 0 ? 0.0 : acc / present;
}

double evaluate_miou(const SegBackbone& m, const std::vector<SceneSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate_miou: empty sample list");
    std::vector<ClassMap> preds, gts;
    preds.reserve(samples.size());
    gts.reserve(samples.size());
    for (const SceneSample& s : samples) {
        preds.push_back(predict_map(m, s.image));
        gts.push_back(s.layout);
    }
    return miou(preds, gts, m.num_classes());
}

}  // namespace zodi
