// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/align/projection_head.hpp"
#include "mint/numerics/optim.hpp"
#include "mint/speech/speech_stack.hpp"
#include "mint/speech/training_log.hpp"
#include "mint/teacher/teacher.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace mint::align {

struct AlignConfig {
    double lambda_mse = 1.0;
    double lambda_cos = 1.0;
    double lr = 1e-3;
    int epochs = 200;
    int patience = 30;
    std::size_t batch_size = 32;
    int t0 = 50;
    AdamWHyper adamw{};

    void validate() const;
    AlignWeights weights() const { return {lambda_mse, lambda_cos}; }
    nlohmann::json to_json() const;
};

struct AlignResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_auc = 0.0;
    double best_val_loss = 0.0;
    double initial_val_loss = 0.0;
    bool stopped_by_hook = false;
};

// Trains `head` on precomputed embeddings. Early stopping on the speech-only
// validation AUC through the teacher classifier, ties broken by validation
// align loss. Labels are only read for the validation AUC.
AlignResult fit_projection_head(const Matrix& zs_train, const Matrix& zm_train, const Matrix& zs_val,
                                const Matrix& zm_val, std::span<const int> val_labels, const teacher::Teacher& teacher,
                                ProjectionHead& head, const AlignConfig& config, std::uint64_t seed,
                                const EpochHook& hook = {});

struct FrozenChecksums {
    std::string encoder;
    std::string teacher;
};

struct AlignmentRun {
    AlignResult fit;
    FrozenChecksums before;
    FrozenChecksums after;
};

// Full Stage 3: embeds both modalities with the frozen components, fits the
// head, and re-verifies both checksums. Any drift raises ChecksumError.
AlignmentRun train_alignment(const Matrix& speech_train, const Matrix& mri_train, const Matrix& speech_val,
                             const Matrix& mri_val, std::span<const int> val_labels,
                             const speech::SpeechStack& encoder, const teacher::Teacher& teacher,
                             ProjectionHead& head, const AlignConfig& config, std::uint64_t seed,
                             const EpochHook& hook = {});

// Manifest for a head checkpoint, carrying the config and frozen references.
nlohmann::json head_manifest(const ProjectionHead& head, const AlignConfig& config, const FrozenChecksums& refs);

}  // namespace mint::align
