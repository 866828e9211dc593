// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/gradcheck.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mint {

GradcheckResult gradcheck(const GradcheckProblem& problem, std::size_t probe_count, double step,
                          std::uint64_t seed, double denominator_floor) {
    if (probe_count == 0) throw ValidationError("gradcheck: probe_count must be positive");
    if (!(step > 0.0)) throw ValidationError("gradcheck: step must be positive");
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < problem.params.size(); ++k) {
        if (!problem.params[k].values.empty()) candidates.push_back(k);
    }
    if (candidates.empty()) throw ValidationError("gradcheck: no parameters to probe");

    const double base = problem.loss();
    if (problem.loss() != base) throw ValidationError("gradcheck: objective is not deterministic");

    const auto analytic = problem.gradient();
    if (analytic.size() != problem.params.size()) {
        throw DimensionError("gradcheck: gradient tensor count differs from parameter count");
    }

    Rng rng(seed);
    GradcheckResult result;
    for (std::size_t probe = 0; probe < probe_count; ++probe) {
        const std::size_t k =
            candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
        auto values = problem.params[k].values;
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng);
        const double saved = values[i];
        values[i] = saved + step;
        const double up = problem.loss();
        values[i] = saved - step;
        const double down = problem.loss();
        values[i] = saved;

        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[k].at(i);
        const double denom = std::max({std::abs(a), std::abs(numeric), denominator_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++result.probes;
        if (rel >= result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_param = problem.params[k].name;
            result.worst_index = i;
            result.worst_analytic = a;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

}  // namespace mint
