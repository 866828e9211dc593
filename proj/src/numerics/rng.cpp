// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/rng.hpp"

namespace mint {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return splitmix64(splitmix64(base) ^ fnv1a(label));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) + splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

double sample_beta(double a, double b, Rng& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    const double s = x + y;
    // Both draws can underflow to zero for tiny shape parameters.
    if (s <= 0.0) return 0.5;
    return x / s;
}

}  // namespace mint
