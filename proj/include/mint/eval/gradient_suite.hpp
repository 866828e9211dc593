// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/gradcheck.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mint::eval {

struct GradientCase {
    std::string architecture;
    GradcheckResult result;
    double seconds = 0.0;
};

struct GradientSuiteOptions {
    std::size_t probes = 64;
    double step = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 7;
};

// encoder_head, encoder_decoder, teacher, projection_head (input gradient
// included so the residual path is covered).
std::vector<GradientCase> run_gradient_suite(const GradientSuiteOptions& options);

nlohmann::json gradient_suite_json(const std::vector<GradientCase>& cases, const GradientSuiteOptions& options);

}  // namespace mint::eval
