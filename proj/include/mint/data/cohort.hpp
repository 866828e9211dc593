// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mint::data {

inline constexpr std::size_t kSpeechDim = 209;
inline constexpr std::size_t kMriDim = 6144;

enum class Label { cn, mci, unlabeled };

// CN -> 0, MCI -> 1 (MCI is the positive class everywhere downstream).
int class_index(Label label);
Label label_from_index(int index);
std::string_view label_token(Label label);  // "CN", "MCI" or ""

struct SubjectRecord {
    std::string subject_id;
    Label label = Label::unlabeled;
    std::optional<std::vector<double>> speech;
    std::optional<std::vector<double>> mri;

    bool labeled() const { return label != Label::unlabeled; }
};

struct Cohort {
    std::vector<SubjectRecord> records;
    std::size_t speech_dim = kSpeechDim;
    std::size_t mri_dim = kMriDim;

    // Unique ids, at least one modality per record, declared dimensions.
    void validate() const;
    std::unordered_map<std::string, std::size_t> index() const;
    std::vector<std::string> ids() const;
    std::vector<std::string> labeled_ids() const;
};

enum class Schema { speech, mri, paired };

// CSV with header `subject_id,label,f0,...,f{d-1}`. A paired file carries the
// speech block followed by the MRI block (d = speech_dim + mri_dim).
Cohort load_cohort(const std::filesystem::path& path, Schema schema, std::size_t speech_dim = kSpeechDim,
                   std::size_t mri_dim = kMriDim);
void write_cohort(const std::filesystem::path& path, const Cohort& cohort, Schema schema);

// Joins a speech cohort and an MRI cohort on subject_id; ids and labels must agree.
Cohort join_paired(const Cohort& speech, const Cohort& mri);

// Restricts `cohort` to `ids`, in that order.
Cohort subset(const Cohort& cohort, std::span<const std::string> ids);

Matrix speech_matrix(const Cohort& cohort, std::span<const std::string> ids);
Matrix mri_matrix(const Cohort& cohort, std::span<const std::string> ids);
std::vector<int> class_labels(const Cohort& cohort, std::span<const std::string> ids);

// Shortest round-trip decimal.
std::string format_double(double v);

// Per-column standardization; zero-variance columns keep std = 1.
struct Standardizer {
    RowVector mean;
    RowVector std;

    static Standardizer fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
    Index dim() const { return mean.size(); }
};

}  // namespace mint::data
