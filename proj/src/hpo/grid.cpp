// SPDX-License-Identifier: Apache-2.0
#include "mint/hpo/grid.hpp"

#include "mint/data/split.hpp"
#include "mint/errors.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace mint::hpo {

void AlignGrid::validate() const {
    if (lambda_mse.empty() || lambda_cos.empty() || lr.empty()) throw ValidationError("align grid axes must be non-empty");
}

GridSearchResult grid_search_align(const AlignGrid& grid, const std::vector<std::string>& train_ids,
                                   const Matrix& zs_train, const Matrix& zm_train, std::span<const int> train_labels,
                                   const teacher::Teacher& teacher, const align::ProjectionHeadSpec& head_spec,
                                   const align::AlignConfig& base, int folds, std::uint64_t seed) {
    grid.validate();
    if (static_cast<Index>(train_ids.size()) != zs_train.rows() || zs_train.rows() != zm_train.rows() ||
        train_labels.size() != train_ids.size()) {
        throw DimensionError("grid_search_align: training rows disagree");
    }
    const auto assignment = data::stratified_kfold(train_ids, train_labels, folds, derive_seed(seed, "grid/folds"));
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < train_ids.size(); ++i) row_of[train_ids[i]] = i;

    struct FoldData {
        Matrix zs_tr, zm_tr, zs_ho, zm_ho;
        std::vector<int> y_ho;
    };
    std::vector<FoldData> fold_data;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> tr;
        std::vector<std::size_t> ho;
        for (const auto& id : assignment.train_ids(f)) tr.push_back(row_of.at(id));
        for (const auto& id : assignment.fold_ids(f)) ho.push_back(row_of.at(id));
        FoldData d{gather_rows(zs_train, tr), gather_rows(zm_train, tr), gather_rows(zs_train, ho),
                   gather_rows(zm_train, ho), {}};
        for (auto r : ho) d.y_ho.push_back(train_labels[r]);
        fold_data.push_back(std::move(d));
    }

    GridSearchResult result;
    result.fold_digest = assignment.digest();
    int cell = 0;
    for (double lm : grid.lambda_mse) {
        for (double lc : grid.lambda_cos) {
            for (double lr : grid.lr) {
                TrialRecord rec;
                rec.trial_id = cell;
                rec.seed = derive_seed(seed, static_cast<std::uint64_t>(cell));
                rec.config = {{"lambda_mse", lm}, {"lambda_cos", lc}, {"lr", lr}};
                rec.fold_digest = result.fold_digest;
                align::AlignConfig cfg = base;
                cfg.lambda_mse = lm;
                cfg.lambda_cos = lc;
                cfg.lr = lr;
                try {
                    cfg.validate();
                    std::vector<double> losses;
                    for (int f = 0; f < folds; ++f) {
                        const auto& d = fold_data[static_cast<std::size_t>(f)];
                        align::ProjectionHead head =
                            align::ProjectionHead::build(head_spec, derive_seed(rec.seed, static_cast<std::uint64_t>(f)));
                        const auto fit = align::fit_projection_head(d.zs_tr, d.zm_tr, d.zs_ho, d.zm_ho, d.y_ho, teacher,
                                                                    head, cfg, derive_seed(rec.seed, "fold" + std::to_string(f)));
                        ++result.fold_fits;
                        rec.fold_values.push_back(fit.best_val_auc);
                        losses.push_back(fit.best_val_loss);
                    }
                    rec.objective = pairwise_mean(rec.fold_values);
                    rec.secondary = pairwise_mean(losses);
                } catch (const std::exception& e) {
                    rec.status = TrialStatus::failed;
                    rec.error = e.what();
                    rec.objective = std::numeric_limits<double>::quiet_NaN();
                }
                if (rec.fold_digest != result.fold_digest) throw ValidationError("grid cells disagree on fold assignment");
                result.trials.push_back(std::move(rec));
                ++cell;
            }
        }
    }
    result.best = select_best(result.trials, Direction::maximize);
    return result;
}

}  // namespace mint::hpo
