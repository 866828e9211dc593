// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

#include <nlohmann/json.hpp>

namespace mint::eval {

// Mann-Whitney AUC: mean over (positive, negative) pairs of
// [s_pos > s_neg] + 0.5 [s_pos == s_neg]. Labels are 0/1 with 1 positive.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

// Percentile interval from `resamples` stratified bootstrap resamples
// (positives and negatives resampled separately, with replacement). Resample i
// draws from its own stream derive_seed(seed, i).
ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::span<const int> labels,
                                std::size_t resamples = 1000, double level = 0.95, std::uint64_t seed = 0,
                                std::size_t threads = 1);

struct MetricReport {
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::size_t bootstrap_resamples = 0;
    double level = 0.95;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// AUC plus bootstrap CI; the interval is widened to contain the point estimate.
MetricReport metric_report(std::span<const double> scores, std::span<const int> labels, std::size_t resamples,
                           double level, std::uint64_t seed, std::size_t threads = 1);

}  // namespace mint::eval
