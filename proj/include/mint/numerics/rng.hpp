// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mint {

using Rng = std::mt19937_64;

// Stable child seed for a named stage or stream: hash(base, label).
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Beta(a, b) via two gamma draws.
double sample_beta(double a, double b, Rng& rng);

}  // namespace mint
