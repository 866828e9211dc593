// SPDX-License-Identifier: Apache-2.0
#include "mint/eval/metrics.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

namespace mint::eval {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("auc: labels must be 0 or 1");
        if (!std::isfinite(scores[i])) throw NumericError("auc: non-finite score");
        pos += static_cast<std::size_t>(labels[i]);
    }
    if (pos == 0 || pos == labels.size()) throw ValidationError("auc: both classes must be present");
}

// Twice the Mann-Whitney U statistic, computed exactly in integers.
std::uint64_t twice_u(std::span<const double> pos, std::span<const double> neg_sorted) {
    std::uint64_t total = 0;
    for (double s : pos) {
        const auto lo = std::lower_bound(neg_sorted.begin(), neg_sorted.end(), s);
        const auto hi = std::upper_bound(lo, neg_sorted.end(), s);
        total += 2 * static_cast<std::uint64_t>(lo - neg_sorted.begin()) + static_cast<std::uint64_t>(hi - lo);
    }
    return total;
}

double auc_from_groups(std::span<const double> pos, std::vector<double>& neg) {
    std::sort(neg.begin(), neg.end());
    const double pairs = static_cast<double>(pos.size()) * static_cast<double>(neg.size());
    return static_cast<double>(twice_u(pos, neg)) / (2.0 * pairs);
}

// Linear interpolation between order statistics (numpy's default percentile).
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    return auc_from_groups(pos, neg);
}

ConfidenceInterval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, std::size_t resamples,
                                double level, std::uint64_t seed, std::size_t threads) {
    check_inputs(scores, labels);
    if (resamples < 2) throw ValidationError("bootstrap needs at least 2 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap level must lie in (0, 1)");
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);

    std::vector<double> stats(resamples);
    auto run = [&](std::size_t begin, std::size_t end) {
        std::vector<double> p(pos.size());
        std::vector<double> n(neg.size());
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
            std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
            std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
            for (auto& v : p) v = pos[pick_pos(rng)];
            for (auto& v : n) v = neg[pick_neg(rng)];
            stats[r] = auc_from_groups(p, n);
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, resamples));
    if (threads == 1) {
        run(0, resamples);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (resamples + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(resamples, b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
        for (auto& th : pool) th.join();
    }
    std::sort(stats.begin(), stats.end());
    const double tail = (1.0 - level) / 2.0;
    return {percentile(stats, tail), percentile(stats, 1.0 - tail)};
}

nlohmann::json MetricReport::to_json() const {
    return {{"auc", auc},         {"ci_low", ci_low}, {"ci_high", ci_high},
            {"n_pos", n_pos},     {"n_neg", n_neg},   {"bootstrap_resamples", bootstrap_resamples},
            {"level", level},     {"seed", seed}};
}

MetricReport metric_report(std::span<const double> scores, std::span<const int> labels, std::size_t resamples,
                           double level, std::uint64_t seed, std::size_t threads) {
    MetricReport r;
    r.auc = auc_roc(scores, labels);
    const auto ci = bootstrap_ci(scores, labels, resamples, level, seed, threads);
    r.ci_low = std::min(ci.low, r.auc);
    r.ci_high = std::max(ci.high, r.auc);
    for (int y : labels) (y == 1 ? r.n_pos : r.n_neg) += 1;
    r.bootstrap_resamples = resamples;
    r.level = level;
    r.seed = seed;
    return r;
}

}  // namespace mint::eval
