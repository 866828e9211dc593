// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/optim.hpp"
#include "mint/speech/speech_stack.hpp"
#include "mint/speech/training_log.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mint::speech {

struct FinetuneConfig {
    int epochs = 200;
    int patience = 30;
    std::size_t batch_size = 32;
    double head_lr = 1e-4;
    double encoder_lr = 1e-5;
    bool use_mixup = true;
    double mixup_alpha = 0.3;
    double label_smoothing = 0.1;
    bool class_weighting = true;
    bool from_scratch = false;  // allow a stack that never went through MAE
    int t0 = 50;
    AdamWHyper adamw{};

    void validate() const;
    nlohmann::json to_json() const;
};

struct FinetuneBatch {
    Matrix x;
    Matrix targets;
    std::vector<double> weights;
};

// Mixup on (x, one-hot y), then label smoothing. Sample weights are the class
// weights dotted with the mixed (pre-smoothing) targets.
FinetuneBatch build_finetune_batch(const Matrix& x, std::span<const int> labels, const std::array<double, 2>& class_w,
                                   const FinetuneConfig& config, Rng& rng);

struct FinetuneResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_auc = 0.0;
    double best_val_loss = 0.0;
    bool stopped_by_hook = false;
};

// The two parameter groups: head at head_lr, encoder at encoder_lr. The decoder
// is never registered.
GroupedAdamW make_finetune_optimizer(SpeechStack& stack, const FinetuneConfig& config);

// Re-initializes C_s, then trains C_s and E_s jointly on labeled speech.
// Early stopping on validation AUC; the best-epoch weights are restored.
FinetuneResult finetune_speech(const Matrix& train_raw, std::span<const int> train_labels, const Matrix& val_raw,
                               std::span<const int> val_labels, SpeechStack& stack, const FinetuneConfig& config,
                               std::uint64_t seed, const EpochHook& hook = {});

// Positive-class probability from two-class logits.
std::vector<double> positive_probability(const Matrix& logits);

}  // namespace mint::speech
