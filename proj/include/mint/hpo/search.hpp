// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mint::hpo {

enum class DimensionKind { categorical, log_uniform, decreasing_subset };

struct Dimension {
    std::string name;
    DimensionKind kind = DimensionKind::categorical;
    nlohmann::json values = nlohmann::json::array();  // categorical choices
    double low = 0.0;                                 // log-uniform bounds
    double high = 0.0;
    std::vector<long long> pool;   // decreasing_subset candidates
    std::vector<int> sizes;        // decreasing_subset subset sizes

    static Dimension categorical(std::string name, nlohmann::json values);
    static Dimension log_uniform(std::string name, double low, double high);
    static Dimension decreasing_subset(std::string name, std::vector<long long> pool, std::vector<int> sizes);
    void validate() const;
};

enum class Direction { maximize, minimize };

struct SearchSpace {
    std::vector<Dimension> dimensions;
    std::size_t budget = 60;
    Direction direction = Direction::maximize;

    void validate() const;
};

// k in {1,2,3}, widths a decreasing subset of {2048,1024,512,256},
// dropout in {0.2,0.3,0.5}, lr log-uniform in [1e-5, 1e-3].
SearchSpace default_teacher_space();
// lambda_c, mask_ratio and lr for the masked autoencoder; minimizes
// validation reconstruction loss.
SearchSpace default_mae_space();

// One independent draw per dimension.
nlohmann::json sample_trial(const SearchSpace& space, Rng& rng);

struct PrunerState {
    int warmup_epochs = 10;
    std::size_t min_trials = 5;
    std::size_t completed = 0;
    std::map<int, std::vector<double>> history;  // epoch -> completed-trial values

    void record_completed(const std::vector<double>& intermediate);
};

double median(std::vector<double> values);

// True iff epoch >= warmup, at least min_trials completed, and `value` is
// strictly worse than the completed-trial median at this epoch.
bool should_prune(const PrunerState& pruner, int epoch, double value, Direction direction);

enum class TrialStatus { completed, pruned, failed };
std::string status_token(TrialStatus s);

struct TrialRecord {
    int trial_id = 0;
    nlohmann::json config;
    std::vector<double> intermediate;
    std::vector<double> fold_values;
    double objective = 0.0;
    double secondary = 0.0;  // tie-break column (mean align loss for grid cells)
    TrialStatus status = TrialStatus::completed;
    int pruned_epoch = -1;
    std::uint64_t seed = 0;
    std::string fold_digest;
    std::string error;

    nlohmann::json to_json() const;
};

// Reports (epoch, value); returning true asks the trainer to stop early.
using ReportFn = std::function<bool(int epoch, double value)>;

struct TrialOutcome {
    std::vector<double> fold_values;
    double objective = 0.0;
    std::string fold_digest;
};

using TrialFn = std::function<TrialOutcome(const nlohmann::json& config, std::uint64_t seed, const ReportFn& report)>;

struct SearchResult {
    std::vector<TrialRecord> trials;
    int best = -1;  // index into trials
    std::string warning;

    const TrialRecord& best_trial() const { return trials.at(static_cast<std::size_t>(best)); }
};

// Serial random search. Each trial draws its config from derive_seed(seed, i).
SearchResult random_search(const SearchSpace& space, const TrialFn& trainer, PrunerState pruner, std::uint64_t seed);

// Index of the best row per the objective column, scanning the table. Falls
// back to pruned rows when nothing completed.
int select_best(const std::vector<TrialRecord>& trials, Direction direction);

std::string trials_jsonl(const std::vector<TrialRecord>& trials);

}  // namespace mint::hpo
