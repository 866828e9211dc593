// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/align/alignment.hpp"
#include "mint/speech/speech_stack.hpp"
#include "mint/teacher/teacher.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mint::eval {

struct PredictionSet {
    std::vector<std::string> subject_ids;
    std::vector<double> scores;  // P(MCI)
    std::vector<int> labels;     // empty when unknown
    std::string path;

    void validate() const;
    std::string to_csv() const;
};

void write_predictions(const std::filesystem::path& file, const PredictionSet& predictions);

// Speech-only chain E_s -> f -> C_m. `refs` are the checksums recorded in the head manifest;
// a component whose checksum disagrees is refused by name.
struct SpeechComponents {
    const speech::SpeechStack* encoder = nullptr;
    const align::ProjectionHead* head = nullptr;
    const teacher::Teacher* teacher = nullptr;
    align::FrozenChecksums refs;
};

void verify_components(const SpeechComponents& c);

// softmax(C_m(f(E_s(x^s)))). Takes speech features only.
PredictionSet infer_speech_only(const std::vector<std::string>& ids, const Matrix& speech_raw,
                                const SpeechComponents& c);
PredictionSet infer_mri_only(const std::vector<std::string>& ids, const Matrix& mri_raw, const teacher::Teacher& t);
// softmax(0.5 (C_m(z^m) + C_m(f(z^s)))).
PredictionSet infer_fusion(const std::vector<std::string>& ids, const Matrix& speech_raw, const Matrix& mri_raw,
                           const SpeechComponents& c);
// softmax(C_s(E_s(x^s))), the directly fine-tuned speech classifier.
PredictionSet infer_speech_head(const std::vector<std::string>& ids, const Matrix& speech_raw,
                                const speech::SpeechStack& stack);

// Fusion logits from the two branches.
Matrix fuse_logits(const Matrix& mri_logits, const Matrix& speech_logits);

struct PcaResult {
    Matrix coords;  // n x 2
    double explained[2] = {0.0, 0.0};
    Matrix components;  // d x 2
};

// Top-2 principal directions of the (n-1)-normalized covariance. Each
// direction is signed so its largest-magnitude loading is positive.
PcaResult pca_2d(const Matrix& x);

struct LrConfig {
    double l2 = 1e-2;
    double lr = 0.1;
    int iterations = 500;
};

struct LrModel {
    data::Standardizer standardizer;
    RowVector weights;
    double bias = 0.0;

    std::vector<double> predict(const Matrix& raw) const;
};

// Full-batch gradient descent on class-weighted, l2-regularized logistic loss
// over standardized features.
LrModel train_lr_baseline(const Matrix& train_raw, std::span<const int> train_labels, const LrConfig& config = {});

}  // namespace mint::eval
