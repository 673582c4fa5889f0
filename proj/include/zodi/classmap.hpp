// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace zodi {

// Integer per-pixel class labels, values in [0, num_classes).
struct ClassMap {
    int h = 0, w = 0;
    std::vector<std::uint8_t> data;

    ClassMap() = default;
    ClassMap(int h_, int w_, std::uint8_t fill = 0)
        : h(h_), w(w_), data(static_cast<std::size_t>(h_) * w_, fill) {
        if (h_ < 0 || w_ < 0) throw std::invalid_argument("ClassMap: negative dimension");
    }

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }

    bool operator==(const ClassMap& o) const { return h == o.h && w == o.w && data == o.data; }

    bool values_in_range(int num_classes) const {
        for (auto v : data)
            if (v >= num_classes) return false;
        return true;
    }
};

}  // namespace zodi
