// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <limits>
#include <vector>

namespace mint {

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_auc = std::numeric_limits<double>::quiet_NaN();
};

inline nlohmann::json history_json(const std::vector<EpochRecord>& history) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : history) {
        nlohmann::json row = {{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}};
        if (r.val_auc == r.val_auc) row["val_auc"] = r.val_auc;
        out.push_back(std::move(row));
    }
    return out;
}

// Called after each epoch with the monitored validation value; returning true
// stops training (used by the HPO pruner).
using EpochHook = std::function<bool(int epoch, double value)>;

}  // namespace mint
