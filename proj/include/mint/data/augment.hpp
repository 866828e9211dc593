// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/matrix.hpp"
#include "mint/numerics/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mint::data {

struct MixupResult {
    Matrix x;
    Matrix y;
    double lambda = 1.0;
    std::vector<std::size_t> permutation;
};

// One lambda ~ Beta(alpha, alpha) per batch; row i is mixed with row perm[i]
// of a uniform random permutation of the same batch.
MixupResult mixup_batch(const Matrix& x, const Matrix& y, double alpha, Rng& rng);

// Deterministic core: x' = lambda x + (1 - lambda) x[perm], same for y.
MixupResult mixup_with(const Matrix& x, const Matrix& y, double lambda, std::span<const std::size_t> permutation);

// (1 - epsilon) y + epsilon / 2 for two-class one-hot rows.
Matrix smooth_labels(const Matrix& y, double epsilon);

}  // namespace mint::data
