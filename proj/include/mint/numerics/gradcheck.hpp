// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/params.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mint {

// A deterministic scalar objective over `params`. `gradient` returns the
// analytic gradient in the same tensor/element order as `params`.
struct GradcheckProblem {
    std::vector<ParamView> params;
    std::function<double()> loss;
    std::function<std::vector<std::vector<double>>()> gradient;
};

struct GradcheckResult {
    double max_rel_error = 0.0;
    std::size_t probes = 0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central differences on `probe_count` randomly chosen scalars (tensor drawn
// uniformly, then element). Relative error is |a - n| / max(|a|, |n|, floor).
GradcheckResult gradcheck(const GradcheckProblem& problem, std::size_t probe_count, double step,
                          std::uint64_t seed, double denominator_floor = 1e-6);

}  // namespace mint
