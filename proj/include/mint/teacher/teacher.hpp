// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/data/cohort.hpp"
#include "mint/io/checkpoint.hpp"
#include "mint/numerics/mlp.hpp"
#include "mint/numerics/optim.hpp"
#include "mint/speech/training_log.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mint::teacher {

inline constexpr Index kBiomarkerDim = 128;

struct TeacherArchSpec {
    Index input_dim = static_cast<Index>(data::kMriDim);
    std::vector<Index> hidden_widths{1024, 256};
    double dropout_rate = 0.3;
    Index bottleneck = kBiomarkerDim;

    // input_dim > h1 > ... > hk > bottleneck, k >= 1.
    void validate() const;
    std::vector<Index> projection_widths() const;
    nlohmann::json to_json() const;
    static TeacherArchSpec from_json(const nlohmann::json& j);
};

// P_m (GELU + dropout after every layer, including the last) and linear C_m.
class Teacher {
public:
    Teacher() = default;
    static Teacher build(const TeacherArchSpec& spec, std::uint64_t seed);

    const TeacherArchSpec& spec() const { return spec_; }
    const Mlp& projection() const { return projection_; }
    const DenseLayer& classifier() const { return classifier_; }
    const data::Standardizer& standardizer() const { return standardizer_; }
    bool has_standardizer() const { return standardizer_.dim() > 0; }

    Mlp& mutable_projection();
    DenseLayer& mutable_classifier();
    void set_standardizer(data::Standardizer s);
    std::vector<ParamView> params();

    // Idempotent. Records the checksum that verify() later compares against.
    void freeze();
    bool frozen() const { return flag_.frozen(); }
    const std::string& frozen_checksum() const { return frozen_checksum_; }
    // Throws ChecksumError if the parameters drifted since freeze().
    void verify() const;

    io::TensorList tensors() const;
    std::string checksum() const;
    nlohmann::json manifest() const;
    static Teacher from_checkpoint(const io::Checkpoint& ckpt);

private:
    void require_mutable(const char* what) const;

    TeacherArchSpec spec_;
    Mlp projection_;
    DenseLayer classifier_;
    data::Standardizer standardizer_;
    FreezeFlag flag_;
    std::string frozen_checksum_;
};

// z^m = P_m(standardize(x^m)) in eval mode.
Matrix embed_mri(const Matrix& raw, const Teacher& teacher);
// C_m(z) on any 128-wide input.
Matrix classify_embedding(const Matrix& z, const Teacher& teacher);

struct TeacherConfig {
    int epochs = 200;
    int patience = 30;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    bool class_weighting = true;
    int cv_folds = 5;  // 0 skips cross-validation
    double val_fraction = 0.15;
    int t0 = 50;
    AdamWHyper adamw{};

    void validate() const;
    nlohmann::json to_json() const;
};

struct TeacherFitResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_auc = 0.0;
    double best_val_loss = 0.0;
    bool stopped_by_hook = false;
};

struct TeacherReport {
    TeacherFitResult fit;
    std::vector<double> cv_aucs;
    double cv_mean = 0.0;
    double cv_std = 0.0;
    std::string fold_digest;

    nlohmann::json to_json() const;
};

// One training run on already-standardized features with early stopping on
// validation AUC. The best-epoch weights are restored into `teacher`.
TeacherFitResult fit_teacher(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                             std::span<const int> val_y, Teacher& teacher, const TeacherConfig& config,
                             std::uint64_t seed, const EpochHook& hook = {});

// Standardizes on the training portion of the MRI cohort, runs k-fold CV with a
// fresh teacher per fold, then trains the returned teacher on a stratified
// train/validation split of the same cohort.
TeacherReport train_teacher(const data::Cohort& mri_cohort, Teacher& teacher, const TeacherConfig& config,
                            std::uint64_t seed, const EpochHook& hook = {});

}  // namespace mint::teacher
