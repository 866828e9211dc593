// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mint {

// Row = sample, column = feature.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class Mode { train, eval };

// Pairwise summation; result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
    return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

// Throws NumericError naming `where` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view where);

// True when MINT_NUMERICS_CHECKS=1 in a build without NDEBUG.
bool numerics_checks_enabled();

// Post-layer finiteness assertion, active only when numerics_checks_enabled().
inline void debug_check_finite(const Matrix& m, std::string_view where) {
#ifndef NDEBUG
    if (numerics_checks_enabled()) require_finite(m, where);
#else
    (void)m;
    (void)where;
#endif
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

}  // namespace mint
