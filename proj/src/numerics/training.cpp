// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/training.hpp"

#include "mint/errors.hpp"

#include <algorithm>
#include <numeric>

namespace mint {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ValidationError("batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
    }
    return batches;
}

bool EarlyStopping::update(int epoch, double metric, double tie_break_loss) {
    bool improved = best_epoch_ < 0;
    if (!improved) {
        const bool better = maximize_ ? metric > best_metric_ : metric < best_metric_;
        improved = better || (metric == best_metric_ && tie_break_loss < best_loss_);
    }
    if (improved) {
        best_epoch_ = epoch;
        best_metric_ = metric;
        best_loss_ = tie_break_loss;
        since_best_ = 0;
    } else {
        ++since_best_;
    }
    return improved;
}

}  // namespace mint
