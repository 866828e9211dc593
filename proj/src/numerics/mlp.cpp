// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/mlp.hpp"

#include "mint/errors.hpp"

namespace mint {

Mlp Mlp::init(const std::vector<Index>& widths, bool activate_last, double dropout_rate, Rng& rng) {
    if (widths.size() < 2) throw ValidationError("an MLP needs at least an input and an output width");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    Mlp mlp;
    mlp.activate_last_ = activate_last;
    mlp.dropout_rate_ = dropout_rate;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        mlp.layers_.push_back(DenseLayer::fan_in_uniform(widths[i], widths[i + 1], rng));
    }
    return mlp;
}

Mlp Mlp::from_layers(std::vector<DenseLayer> layers, bool activate_last, double dropout_rate) {
    for (std::size_t i = 1; i < layers.size(); ++i) {
        if (layers[i].in_dim() != layers[i - 1].out_dim()) {
            throw DimensionError("MLP layer " + std::to_string(i) + " input width does not match previous output");
        }
    }
    Mlp mlp;
    mlp.layers_ = std::move(layers);
    mlp.activate_last_ = activate_last;
    mlp.dropout_rate_ = dropout_rate;
    return mlp;
}

Mlp Mlp::zeros_like() const {
    Mlp z;
    z.activate_last_ = activate_last_;
    z.dropout_rate_ = dropout_rate_;
    for (const auto& l : layers_) z.layers_.push_back(DenseLayer::zeros(l.in_dim(), l.out_dim()));
    return z;
}

std::vector<Index> Mlp::widths() const {
    std::vector<Index> w;
    if (layers_.empty()) return w;
    w.push_back(layers_.front().in_dim());
    for (const auto& l : layers_) w.push_back(l.out_dim());
    return w;
}

void Mlp::set_zero() {
    for (auto& l : layers_) {
        l.weights.setZero();
        l.bias.setZero();
    }
}

Matrix Mlp::forward(const Matrix& x, Mode mode, Rng* rng, Cache* cache) const {
    if (cache) {
        cache->inputs.clear();
        cache->pre_act.clear();
        cache->masks.clear();
    }
    const bool stochastic = mode == Mode::train && dropout_rate_ > 0.0;
    if (stochastic && rng == nullptr) throw ValidationError("MLP train-mode dropout requires an RNG");
    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Matrix pre = dense_forward(h, layers_[i]);
        if (cache) cache->inputs.push_back(std::move(h));
        if (!activated(i)) {
            h = std::move(pre);
            if (cache) {
                cache->pre_act.emplace_back();
                cache->masks.emplace_back();
            }
            continue;
        }
        Matrix act = gelu(pre);
        if (stochastic) {
            auto dropped = dropout(act, dropout_rate_, mode, *rng);
            act = std::move(dropped.output);
            if (cache) cache->masks.push_back(std::move(dropped.mask));
        } else if (cache) {
            cache->masks.emplace_back();
        }
        if (cache) cache->pre_act.push_back(std::move(pre));
        h = std::move(act);
    }
    return h;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& grad_out, Mlp& grad, bool need_input_grad) const {
    if (cache.inputs.size() != layers_.size()) throw ValidationError("MLP backward called without a matching cache");
    Matrix g = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (activated(k)) {
            g = dropout_backward(cache.masks[k], g);
            g = gelu_backward(cache.pre_act[k], g);
        }
        const bool want_dx = k > 0 || need_input_grad;
        g = dense_backward(cache.inputs[k], layers_[k], g, grad.layers_[k], want_dx);
    }
    return g;
}

void Mlp::append_params(std::vector<ParamView>& out, const std::string& prefix, const FreezeFlag* flag) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].append_params(out, prefix + "." + std::to_string(i), flag);
    }
}

void Mlp::append_params(std::vector<ConstParamView>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].append_params(out, prefix + "." + std::to_string(i));
    }
}

}  // namespace mint
