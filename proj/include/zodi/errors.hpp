// Copyright (C) 2026 zodi-toy contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace zodi {

// Thrown when an operation requires a trained model but got a fresh one.
struct UnusableModelError : std::runtime_error {
    explicit UnusableModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by test fixtures on queries outside their registered domain.
struct FixtureError : std::runtime_error {
    explicit FixtureError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mathematically undefined input (e.g. cosine similarity of a zero vector).
struct DegenerateInputError : std::invalid_argument {
    explicit DegenerateInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace zodi
