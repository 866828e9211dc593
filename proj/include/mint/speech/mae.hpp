// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/layers.hpp"
#include "mint/numerics/optim.hpp"
#include "mint/speech/speech_stack.hpp"
#include "mint/speech/training_log.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace mint::speech {

struct MaskSpec {
    double mask_ratio = 0.30;
    double fill_value = 0.0;

    // round(mask_ratio * dim); must leave at least one masked and one visible feature.
    std::size_t masked_count(std::size_t dim) const;
};

using MaskSets = std::vector<std::vector<std::size_t>>;

struct MaskedBatch {
    Matrix x;
    MaskSets masks;  // sorted indices per row
};

MaskedBatch mask_features(const Matrix& x, const MaskSpec& spec, Rng& rng);

// Mean over rows of  sum_{i in M}(x_i - xhat_i)^2 / |M| + lambda_c (1 - cos(x, xhat)),
// the cosine taken over the full vectors. Gradient is d/d(xhat).
LossGrad mae_loss(const Matrix& x, const Matrix& x_hat, const MaskSets& masks, double lambda_c);

struct MaeConfig {
    double lambda_c = 0.5;
    double mask_ratio = 0.30;
    int epochs = 200;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    int patience = 30;
    double val_fraction = 0.10;
    int t0 = 50;
    AdamWHyper adamw{};

    void validate() const;
    nlohmann::json to_json() const;
};

struct MaeResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    double initial_val_loss = 0.0;  // held-out loss before the first update
    // Masked MSE alone on the held-out set, per epoch and at the best epoch.
    std::vector<double> val_reconstruction;
    double best_val_reconstruction = 0.0;
    bool stopped_by_hook = false;
};

// Fits standardization on the pool, holds out `val_fraction` for early
// stopping on reconstruction loss, restores the best-epoch encoder/decoder.
// The hook receives the held-out masked MSE, which is comparable across
// lambda_c values.
MaeResult pretrain_mae(const Matrix& unlabeled_raw, SpeechStack& stack, const MaeConfig& config, std::uint64_t seed,
                       const EpochHook& hook = {});

}  // namespace mint::speech
