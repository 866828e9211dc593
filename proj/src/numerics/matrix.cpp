// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/matrix.hpp"

#include "mint/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace mint {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kLeaf = 16;
    if (values.size() <= kLeaf) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void require_finite(const Matrix& m, std::string_view where) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j))) {
                throw NumericError("non-finite value at (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ") after " + std::string(where));
            }
        }
    }
}

bool numerics_checks_enabled() {
    static const bool enabled = [] {
        const char* v = std::getenv("MINT_NUMERICS_CHECKS");
        return v != nullptr && std::string_view(v) == "1";
    }();
    return enabled;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(rows[i]));
    }
    return out;
}

}  // namespace mint
