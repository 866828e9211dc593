// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/align/alignment.hpp"
#include "mint/hpo/search.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mint::hpo {

struct AlignGrid {
    std::vector<double> lambda_mse{0.5, 1.0, 2.0};
    std::vector<double> lambda_cos{0.5, 1.0, 2.0};
    std::vector<double> lr{1e-4, 3e-4, 1e-3};

    void validate() const;
    std::size_t size() const { return lambda_mse.size() * lambda_cos.size() * lr.size(); }
};

struct GridSearchResult {
    std::vector<TrialRecord> trials;  // one per cell, in lexicographic grid order
    int best = -1;
    std::string fold_digest;
    std::size_t fold_fits = 0;

    const TrialRecord& best_trial() const { return trials.at(static_cast<std::size_t>(best)); }
};

// Every cell is cross-validated on the same stratified k-fold assignment of
// the training embeddings. Objective: mean fold speech-only AUC; ties go to
// the lower mean align loss, then to the earlier cell.
GridSearchResult grid_search_align(const AlignGrid& grid, const std::vector<std::string>& train_ids,
                                   const Matrix& zs_train, const Matrix& zm_train, std::span<const int> train_labels,
                                   const teacher::Teacher& teacher, const align::ProjectionHeadSpec& head_spec,
                                   const align::AlignConfig& base, int folds, std::uint64_t seed);

}  // namespace mint::hpo
