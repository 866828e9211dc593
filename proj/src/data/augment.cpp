// SPDX-License-Identifier: Apache-2.0
#include "mint/data/augment.hpp"

#include "mint/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mint::data {

MixupResult mixup_batch(const Matrix& x, const Matrix& y, double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw ValidationError("mixup alpha must be positive, got " + std::to_string(alpha));
    if (x.rows() != y.rows()) throw DimensionError("mixup: inputs and targets are not row-aligned");
    const double lambda = sample_beta(alpha, alpha, rng);
    std::vector<std::size_t> perm(static_cast<std::size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return mixup_with(x, y, lambda, perm);
}

MixupResult mixup_with(const Matrix& x, const Matrix& y, double lambda, std::span<const std::size_t> permutation) {
    if (x.rows() != y.rows()) throw DimensionError("mixup: inputs and targets are not row-aligned");
    if (static_cast<Index>(permutation.size()) != x.rows()) throw DimensionError("mixup: permutation length mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mixup lambda must lie in [0, 1]");
    MixupResult out;
    out.lambda = lambda;
    out.permutation.assign(permutation.begin(), permutation.end());
    const Matrix xp = gather_rows(x, permutation);
    const Matrix yp = gather_rows(y, permutation);
    out.x = lambda * x + (1.0 - lambda) * xp;
    out.y = lambda * y + (1.0 - lambda) * yp;
    return out;
}

Matrix smooth_labels(const Matrix& y, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw ValidationError("label smoothing epsilon must lie in [0, 1), got " + std::to_string(epsilon));
    }
    if (y.cols() != 2) throw DimensionError("label smoothing expects two-class targets");
    return ((1.0 - epsilon) * y.array() + epsilon / 2.0).matrix();
}

}  // namespace mint::data
