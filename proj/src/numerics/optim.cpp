// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/optim.hpp"

#include "mint/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace mint {

AdamWState AdamWState::for_params(std::span<const ParamView> params, AdamWHyper hyper, std::string owner) {
    AdamWState s;
    s.hyper = hyper;
    s.owner = std::move(owner);
    for (const auto& p : params) {
        s.first_moment.emplace_back(p.values.size(), 0.0);
        s.second_moment.emplace_back(p.values.size(), 0.0);
    }
    return s;
}

void adamw_step(std::span<const ParamView> params, std::span<const ConstParamView> grads,
                AdamWState& state, double lr) {
    if (!(lr > 0.0)) throw ValidationError(state.owner + ": learning rate must be positive");
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw DimensionError(state.owner + ": parameter, gradient and moment lists differ in length");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].is_frozen()) {
            throw FrozenError(state.owner + ": optimizer step on frozen parameter " + params[k].name);
        }
        if (params[k].values.size() != grads[k].values.size() ||
            params[k].values.size() != state.first_moment[k].size()) {
            throw DimensionError(state.owner + ": shape mismatch for parameter " + params[k].name);
        }
        const Eigen::Map<const Eigen::ArrayXd> g(grads[k].values.data(),
                                                 static_cast<Eigen::Index>(grads[k].values.size()));
        if (!g.allFinite()) {
            throw NumericError(state.owner + ": non-finite gradient for parameter " + params[k].name);
        }
    }
    const auto& h = state.hyper;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    const double decay = 1.0 - lr * h.weight_decay;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto n = static_cast<Eigen::Index>(params[k].values.size());
        Eigen::Map<Eigen::ArrayXd> p(params[k].values.data(), n);
        Eigen::Map<const Eigen::ArrayXd> g(grads[k].values.data(), n);
        Eigen::Map<Eigen::ArrayXd> m(state.first_moment[k].data(), n);
        Eigen::Map<Eigen::ArrayXd> v(state.second_moment[k].data(), n);
        if (h.weight_decay != 0.0) p *= decay;
        m = h.beta1 * m + (1.0 - h.beta1) * g;
        v = h.beta2 * v + (1.0 - h.beta2) * g.square();
        p -= lr * (m / bc1) / ((v / bc2).sqrt() + h.epsilon);
    }
}

double CosineRestartSchedule::lr_at(std::int64_t epoch) const {
    if (epoch < 0) throw ValidationError("cosine schedule: epoch must be non-negative");
    if (t0 <= 0) throw ValidationError("cosine schedule: t0 must be positive");
    const auto phase = static_cast<double>(epoch % t0) / static_cast<double>(t0);
    if (phase == 0.0) return base_lr;
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

double cosine_restart_lr(const CosineRestartSchedule& schedule, std::int64_t epoch) {
    return schedule.lr_at(epoch);
}

void GroupedAdamW::add_group(std::string name, std::vector<ParamView> params, double base_lr) {
    if (!(base_lr > 0.0)) throw ValidationError(owner_ + ": group " + name + " needs a positive learning rate");
    Group g;
    g.state = AdamWState::for_params(params, hyper_, owner_ + "/" + name);
    g.name = std::move(name);
    g.params = std::move(params);
    g.schedule = {base_lr, t0_};
    groups_.push_back(std::move(g));
}

void GroupedAdamW::step(const std::vector<std::vector<ConstParamView>>& grads_per_group, std::int64_t epoch) {
    if (grads_per_group.size() != groups_.size()) {
        throw DimensionError(owner_ + ": expected gradients for " + std::to_string(groups_.size()) + " groups");
    }
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        adamw_step(groups_[i].params, grads_per_group[i], groups_[i].state, groups_[i].schedule.lr_at(epoch));
    }
}

const GroupedAdamW::Group& GroupedAdamW::group(const std::string& name) const {
    for (const auto& g : groups_) {
        if (g.name == name) return g;
    }
    throw ValidationError(owner_ + ": no parameter group named " + name);
}

}  // namespace mint
