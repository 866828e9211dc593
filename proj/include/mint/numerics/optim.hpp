// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/params.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mint {

struct AdamWHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::int64_t step_count = 0;
    AdamWHyper hyper;
    std::string owner;  // stage label used in error messages

    static AdamWState for_params(std::span<const ParamView> params, AdamWHyper hyper, std::string owner);
};

// One decoupled-weight-decay Adam update with bias-corrected moments. Rejects
// frozen parameters and non-finite gradients before touching any value.
void adamw_step(std::span<const ParamView> params, std::span<const ConstParamView> grads,
                AdamWState& state, double lr);

// lr = base * 0.5 * (1 + cos(pi * (epoch mod t0) / t0)).
struct CosineRestartSchedule {
    double base_lr = 1e-3;
    int t0 = 50;

    double lr_at(std::int64_t epoch) const;
};

double cosine_restart_lr(const CosineRestartSchedule& schedule, std::int64_t epoch);

// AdamW over named parameter groups, each with its own base learning rate under a
// shared cosine-restart shape.
class GroupedAdamW {
public:
    struct Group {
        std::string name;
        std::vector<ParamView> params;
        AdamWState state;
        CosineRestartSchedule schedule;
    };

    GroupedAdamW(AdamWHyper hyper, int t0, std::string owner) : hyper_(hyper), t0_(t0), owner_(std::move(owner)) {}

    void add_group(std::string name, std::vector<ParamView> params, double base_lr);
    void step(const std::vector<std::vector<ConstParamView>>& grads_per_group, std::int64_t epoch);
    const std::vector<Group>& groups() const { return groups_; }
    const Group& group(const std::string& name) const;

private:
    AdamWHyper hyper_;
    int t0_;
    std::string owner_;
    std::vector<Group> groups_;
};

}  // namespace mint
