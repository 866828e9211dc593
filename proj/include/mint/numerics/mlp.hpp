// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/layers.hpp"

#include <string>
#include <vector>

namespace mint {

// Chain of dense layers. Every layer except possibly the last is followed by
// GELU then dropout; `activate_last` extends that to the final layer.
class Mlp {
public:
    struct Cache {
        std::vector<Matrix> inputs;       // input of each dense layer
        std::vector<Matrix> pre_act;      // dense output before GELU
        std::vector<Matrix> masks;        // dropout masks (may be empty)
    };

    Mlp() = default;

    // `widths` lists every layer boundary, e.g. {209, 256, 128}.
    static Mlp init(const std::vector<Index>& widths, bool activate_last, double dropout_rate, Rng& rng);
    Mlp zeros_like() const;
    void set_zero();

    Matrix forward(const Matrix& x, Mode mode, Rng* rng, Cache* cache) const;
    Matrix forward_eval(const Matrix& x) const { return forward(x, Mode::eval, nullptr, nullptr); }

    // Accumulates parameter gradients into `grad` (shaped like *this).
    Matrix backward(const Cache& cache, const Matrix& grad_out, Mlp& grad, bool need_input_grad) const;

    void append_params(std::vector<ParamView>& out, const std::string& prefix, const FreezeFlag* flag = nullptr);
    void append_params(std::vector<ConstParamView>& out, const std::string& prefix) const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    std::vector<Index> widths() const;
    bool activate_last() const { return activate_last_; }
    double dropout_rate() const { return dropout_rate_; }
    Index in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    Index out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

    static Mlp from_layers(std::vector<DenseLayer> layers, bool activate_last, double dropout_rate);

private:
    bool activated(std::size_t i) const { return i + 1 < layers_.size() || activate_last_; }

    std::vector<DenseLayer> layers_;
    bool activate_last_ = false;
    double dropout_rate_ = 0.0;
};

}  // namespace mint
