// SPDX-License-Identifier: Apache-2.0
#include "mint/hpo/search.hpp"

#include "mint/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mint::hpo {

Dimension Dimension::categorical(std::string name, nlohmann::json values) {
    Dimension d;
    d.name = std::move(name);
    d.kind = DimensionKind::categorical;
    d.values = std::move(values);
    return d;
}

Dimension Dimension::log_uniform(std::string name, double low, double high) {
    Dimension d;
    d.name = std::move(name);
    d.kind = DimensionKind::log_uniform;
    d.low = low;
    d.high = high;
    return d;
}

Dimension Dimension::decreasing_subset(std::string name, std::vector<long long> pool, std::vector<int> sizes) {
    Dimension d;
    d.name = std::move(name);
    d.kind = DimensionKind::decreasing_subset;
    d.pool = std::move(pool);
    d.sizes = std::move(sizes);
    return d;
}

void Dimension::validate() const {
    if (name.empty()) throw ValidationError("search dimension needs a name");
    switch (kind) {
        case DimensionKind::categorical:
            if (!values.is_array() || values.empty()) {
                throw ValidationError("categorical dimension '" + name + "' has no values");
            }
            break;
        case DimensionKind::log_uniform:
            if (!(low > 0.0) || !(high >= low)) {
                throw ValidationError("log-uniform dimension '" + name + "' needs 0 < low <= high");
            }
            break;
        case DimensionKind::decreasing_subset:
            if (pool.empty() || sizes.empty()) throw ValidationError("subset dimension '" + name + "' is empty");
            for (int k : sizes) {
                if (k < 1 || static_cast<std::size_t>(k) > pool.size()) {
                    throw ValidationError("subset dimension '" + name + "' has an impossible size");
                }
            }
            break;
    }
}

void SearchSpace::validate() const {
    if (dimensions.empty()) throw ValidationError("search space has no dimensions");
    if (budget < 1) throw ValidationError("search budget must be at least 1");
    for (const auto& d : dimensions) d.validate();
}

SearchSpace default_teacher_space() {
    SearchSpace s;
    s.dimensions.push_back(Dimension::decreasing_subset("hidden_widths", {2048, 1024, 512, 256}, {1, 2, 3}));
    s.dimensions.push_back(Dimension::categorical("dropout_rate", {0.2, 0.3, 0.5}));
    s.dimensions.push_back(Dimension::log_uniform("lr", 1e-5, 1e-3));
    s.budget = 60;
    s.direction = Direction::maximize;
    return s;
}

SearchSpace default_mae_space() {
    SearchSpace s;
    s.dimensions.push_back(Dimension::categorical("lambda_c", {0.0, 0.1, 0.25, 0.5, 1.0}));
    s.dimensions.push_back(Dimension::categorical("mask_ratio", {0.15, 0.3, 0.5}));
    s.dimensions.push_back(Dimension::log_uniform("lr", 1e-4, 3e-3));
    s.budget = 60;
    s.direction = Direction::minimize;
    return s;
}

nlohmann::json sample_trial(const SearchSpace& space, Rng& rng) {
    space.validate();
    nlohmann::json config = nlohmann::json::object();
    for (const auto& d : space.dimensions) {
        switch (d.kind) {
            case DimensionKind::categorical: {
                std::uniform_int_distribution<std::size_t> pick(0, d.values.size() - 1);
                config[d.name] = d.values.at(pick(rng));
                break;
            }
            case DimensionKind::log_uniform: {
                std::uniform_real_distribution<double> u(std::log(d.low), std::log(d.high));
                config[d.name] = std::exp(u(rng));
                break;
            }
            case DimensionKind::decreasing_subset: {
                std::uniform_int_distribution<std::size_t> pick_k(0, d.sizes.size() - 1);
                const auto k = static_cast<std::size_t>(d.sizes[pick_k(rng)]);
                std::vector<long long> pool = d.pool;
                for (std::size_t i = 0; i < k; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
                    std::swap(pool[i], pool[pick(rng)]);
                }
                pool.resize(k);
                std::sort(pool.begin(), pool.end(), std::greater<>());
                config[d.name] = pool;
                break;
            }
        }
    }
    return config;
}

void PrunerState::record_completed(const std::vector<double>& intermediate) {
    ++completed;
    for (std::size_t e = 0; e < intermediate.size(); ++e) history[static_cast<int>(e)].push_back(intermediate[e]);
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool should_prune(const PrunerState& pruner, int epoch, double value, Direction direction) {
    if (epoch < pruner.warmup_epochs || pruner.completed < pruner.min_trials) return false;
    const auto it = pruner.history.find(epoch);
    if (it == pruner.history.end() || it->second.empty()) return false;
    const double m = median(it->second);
    return direction == Direction::maximize ? value < m : value > m;
}

std::string status_token(TrialStatus s) {
    switch (s) {
        case TrialStatus::completed:
            return "completed";
        case TrialStatus::pruned:
            return "pruned";
        case TrialStatus::failed:
            return "failed";
    }
    return "failed";
}

nlohmann::json TrialRecord::to_json() const {
    nlohmann::json j = {{"trial_id", trial_id},   {"config", config},       {"intermediate", intermediate},
                        {"fold_values", fold_values}, {"objective", objective}, {"secondary", secondary},
                        {"status", status_token(status)}, {"seed", seed},   {"fold_digest", fold_digest}};
    if (status == TrialStatus::pruned) j["pruned_epoch"] = pruned_epoch;
    if (!error.empty()) j["error"] = error;
    return j;
}

int select_best(const std::vector<TrialRecord>& trials, Direction direction) {
    auto better = [direction](const TrialRecord& a, const TrialRecord& b) {
        if (a.objective != b.objective) {
            return direction == Direction::maximize ? a.objective > b.objective : a.objective < b.objective;
        }
        if (a.secondary != b.secondary) return a.secondary < b.secondary;
        return a.trial_id < b.trial_id;
    };
    for (TrialStatus wanted : {TrialStatus::completed, TrialStatus::pruned}) {
        int best = -1;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            const auto& t = trials[i];
            if (t.status != wanted || !std::isfinite(t.objective)) continue;
            if (best < 0 || better(t, trials[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
        }
        if (best >= 0) return best;
    }
    return -1;
}

SearchResult random_search(const SearchSpace& space, const TrialFn& trainer, PrunerState pruner, std::uint64_t seed) {
    space.validate();
    SearchResult result;
    for (std::size_t i = 0; i < space.budget; ++i) {
        TrialRecord rec;
        rec.trial_id = static_cast<int>(i);
        rec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        Rng rng(derive_seed(rec.seed, "hpo/sample"));
        rec.config = sample_trial(space, rng);
        const ReportFn report = [&](int epoch, double value) {
            if (static_cast<std::size_t>(epoch) != rec.intermediate.size()) {
                throw ValidationError("trial reports must arrive once per epoch in order");
            }
            rec.intermediate.push_back(value);
            if (rec.status != TrialStatus::pruned && should_prune(pruner, epoch, value, space.direction)) {
                rec.status = TrialStatus::pruned;
                rec.pruned_epoch = epoch;
            }
            return rec.status == TrialStatus::pruned;
        };
        try {
            const TrialOutcome out = trainer(rec.config, rec.seed, report);
            rec.fold_values = out.fold_values;
            rec.objective = out.objective;
            rec.fold_digest = out.fold_digest;
        } catch (const std::exception& e) {
            rec.status = TrialStatus::failed;
            rec.error = e.what();
            rec.objective = std::numeric_limits<double>::quiet_NaN();
        }
        if (rec.status == TrialStatus::pruned && !rec.intermediate.empty()) {
            rec.objective = rec.intermediate.back();
        }
        if (rec.status == TrialStatus::completed) pruner.record_completed(rec.intermediate);
        result.trials.push_back(std::move(rec));
    }
    result.best = select_best(result.trials, space.direction);
    if (result.best >= 0 && result.best_trial().status != TrialStatus::completed) {
        result.warning = "no trial completed; best pruned trial returned";
    } else if (result.best < 0) {
        result.warning = "every trial failed";
    }
    return result;
}

std::string trials_jsonl(const std::vector<TrialRecord>& trials) {
    std::string out;
    for (const auto& t : trials) {
        out += t.to_json().dump();
        out += '\n';
    }
    return out;
}

}  // namespace mint::hpo
