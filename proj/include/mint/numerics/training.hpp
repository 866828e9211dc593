// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/rng.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace mint {

// Shuffled mini-batches over [0, n). A trailing batch of one row is merged into
// its predecessor so batch-norm always sees at least two rows.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

// Patience-based early stopping. A new metric value counts as an improvement
// when it is strictly better, or equal with a strictly lower tie-break loss.
class EarlyStopping {
public:
    EarlyStopping(int patience, bool maximize) : patience_(patience), maximize_(maximize) {}

    // Returns true when `metric` is the new best.
    bool update(int epoch, double metric, double tie_break_loss);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_metric() const { return best_metric_; }
    double best_loss() const { return best_loss_; }

private:
    int patience_;
    bool maximize_;
    int best_epoch_ = -1;
    int since_best_ = 0;
    double best_metric_ = 0.0;
    double best_loss_ = std::numeric_limits<double>::infinity();
};

}  // namespace mint
