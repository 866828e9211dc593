// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/matrix.hpp"
#include "mint/numerics/params.hpp"
#include "mint/numerics/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace mint {

// y = x * weights + bias, weights stored (in_dim x out_dim).
struct DenseLayer {
    Matrix weights;
    RowVector bias;

    Index in_dim() const { return weights.rows(); }
    Index out_dim() const { return weights.cols(); }

    static DenseLayer zeros(Index in_dim, Index out_dim);
    // U(-1/sqrt(in_dim), 1/sqrt(in_dim)) for weights and bias.
    static DenseLayer fan_in_uniform(Index in_dim, Index out_dim, Rng& rng);

    void append_params(std::vector<ParamView>& out, const std::string& prefix,
                       const FreezeFlag* flag = nullptr);
    void append_params(std::vector<ConstParamView>& out, const std::string& prefix) const;
};

Matrix dense_forward(const Matrix& x, const DenseLayer& layer);

// Accumulates dL/dW, dL/db into `grad` and returns dL/dx (empty when
// `need_input_grad` is false).
Matrix dense_backward(const Matrix& x, const DenseLayer& layer, const Matrix& grad_out,
                      DenseLayer& grad, bool need_input_grad = true);

// Exact GELU, x * Phi(x).
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& grad_out);

struct DropoutResult {
    Matrix output;
    Matrix mask;  // 0 or 1/(1-rate) per element; empty when no masking happened
};

// Inverted dropout. Eval mode and rate 0 are the identity.
DropoutResult dropout(const Matrix& x, double rate, Mode mode, Rng& rng);
Matrix dropout_backward(const Matrix& mask, const Matrix& grad_out);

struct BatchNormState {
    RowVector gamma;
    RowVector beta;
    RowVector running_mean;
    RowVector running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    Index dim() const { return gamma.size(); }
    static BatchNormState identity(Index dim);
    void validate() const;

    void append_params(std::vector<ParamView>& out, const std::string& prefix,
                       const FreezeFlag* flag = nullptr);
    void append_params(std::vector<ConstParamView>& out, const std::string& prefix) const;
};

struct BatchNormCache {
    Mode mode = Mode::eval;
    Matrix x_hat;
    RowVector inv_std;
};

// Train mode normalizes with batch statistics (biased variance) and, when
// `update_running` is set, folds them into the running estimates (unbiased
// variance). Eval mode uses the running estimates.
Matrix batchnorm(const Matrix& x, BatchNormState& state, Mode mode,
                 BatchNormCache* cache = nullptr, bool update_running = true);
Matrix batchnorm_eval(const Matrix& x, const BatchNormState& state);

// Returns dL/dx; accumulates d gamma / d beta into `grad`.
Matrix batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state,
                          const Matrix& grad_out, BatchNormState& grad);

Matrix softmax(const Matrix& logits);

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // dL/d(input)
};

// Weighted mean over rows of -sum_c q_c log softmax(logits)_c, normalized by the
// total weight. Target rows must lie on the probability simplex.
LossGrad soft_cross_entropy(const Matrix& logits, const Matrix& targets,
                            std::span<const double> sample_weights);

Matrix one_hot(std::span<const int> labels, Index classes);

}  // namespace mint
