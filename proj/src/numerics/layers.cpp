// SPDX-License-Identifier: Apache-2.0
#include "mint/numerics/layers.hpp"

#include "mint/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mint {
namespace {

std::string shape_str(Index r, Index c) {
    return "(" + std::to_string(r) + " x " + std::to_string(c) + ")";
}

void push_view(std::vector<ParamView>& out, std::string name, double* data, Index size,
               const FreezeFlag* flag) {
    out.push_back({std::move(name), std::span<double>(data, static_cast<std::size_t>(size)),
                   flag ? flag->observe() : nullptr});
}

void push_view(std::vector<ConstParamView>& out, std::string name, const double* data, Index size) {
    out.push_back({std::move(name), std::span<const double>(data, static_cast<std::size_t>(size))});
}

}  // namespace

DenseLayer DenseLayer::zeros(Index in_dim, Index out_dim) {
    return {Matrix::Zero(in_dim, out_dim), RowVector::Zero(out_dim)};
}

DenseLayer DenseLayer::fan_in_uniform(Index in_dim, Index out_dim, Rng& rng) {
    if (in_dim <= 0 || out_dim <= 0) {
        throw DimensionError("dense layer dimensions must be positive, got " + shape_str(in_dim, out_dim));
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer = zeros(in_dim, out_dim);
    for (Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = u(rng);
    for (Index j = 0; j < out_dim; ++j) layer.bias[j] = u(rng);
    return layer;
}

void DenseLayer::append_params(std::vector<ParamView>& out, const std::string& prefix,
                               const FreezeFlag* flag) {
    push_view(out, prefix + ".weights", weights.data(), weights.size(), flag);
    push_view(out, prefix + ".bias", bias.data(), bias.size(), flag);
}

void DenseLayer::append_params(std::vector<ConstParamView>& out, const std::string& prefix) const {
    push_view(out, prefix + ".weights", weights.data(), weights.size());
    push_view(out, prefix + ".bias", bias.data(), bias.size());
}

Matrix dense_forward(const Matrix& x, const DenseLayer& layer) {
    if (x.cols() != layer.in_dim()) {
        throw DimensionError("dense_forward: input " + shape_str(x.rows(), x.cols()) +
                             " does not match layer " + shape_str(layer.in_dim(), layer.out_dim()));
    }
    Matrix y(x.rows(), layer.out_dim());
    y.noalias() = x * layer.weights;
    y.rowwise() += layer.bias;
    debug_check_finite(y, "dense_forward");
    return y;
}

Matrix dense_backward(const Matrix& x, const DenseLayer& layer, const Matrix& grad_out,
                      DenseLayer& grad, bool need_input_grad) {
    if (grad_out.rows() != x.rows() || grad_out.cols() != layer.out_dim()) {
        throw DimensionError("dense_backward: upstream gradient " +
                             shape_str(grad_out.rows(), grad_out.cols()) + " does not match output " +
                             shape_str(x.rows(), layer.out_dim()));
    }
    grad.weights.noalias() += x.transpose() * grad_out;
    grad.bias += grad_out.colwise().sum();
    if (!need_input_grad) return {};
    Matrix dx(x.rows(), x.cols());
    dx.noalias() = grad_out * layer.weights.transpose();
    return dx;
}

Matrix gelu(const Matrix& x) {
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); });
}

Matrix gelu_backward(const Matrix& x, const Matrix& grad_out) {
    static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const Matrix d = x.unaryExpr([](double v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        return cdf + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
    });
    return d.cwiseProduct(grad_out);
}

DropoutResult dropout(const Matrix& x, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) return {x, Matrix()};
    const double keep_scale = 1.0 / (1.0 - rate);
    std::bernoulli_distribution drop(rate);
    Matrix mask(x.rows(), x.cols());
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = drop(rng) ? 0.0 : keep_scale;
    return {x.cwiseProduct(mask), std::move(mask)};
}

Matrix dropout_backward(const Matrix& mask, const Matrix& grad_out) {
    if (mask.size() == 0) return grad_out;
    return grad_out.cwiseProduct(mask);
}

BatchNormState BatchNormState::identity(Index dim) {
    BatchNormState s;
    s.gamma = RowVector::Ones(dim);
    s.beta = RowVector::Zero(dim);
    s.running_mean = RowVector::Zero(dim);
    s.running_var = RowVector::Ones(dim);
    return s;
}

void BatchNormState::validate() const {
    const Index d = gamma.size();
    if (beta.size() != d || running_mean.size() != d || running_var.size() != d) {
        throw DimensionError("batch-norm state vectors have inconsistent lengths");
    }
    if (!(momentum > 0.0 && momentum < 1.0)) throw ValidationError("batch-norm momentum must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("batch-norm epsilon must be positive");
    if ((running_var.array() <= 0.0).any()) throw ValidationError("batch-norm running variance must be positive");
}

void BatchNormState::append_params(std::vector<ParamView>& out, const std::string& prefix,
                                   const FreezeFlag* flag) {
    push_view(out, prefix + ".gamma", gamma.data(), gamma.size(), flag);
    push_view(out, prefix + ".beta", beta.data(), beta.size(), flag);
}

void BatchNormState::append_params(std::vector<ConstParamView>& out, const std::string& prefix) const {
    push_view(out, prefix + ".gamma", gamma.data(), gamma.size());
    push_view(out, prefix + ".beta", beta.data(), beta.size());
}

Matrix batchnorm(const Matrix& x, BatchNormState& state, Mode mode, BatchNormCache* cache,
                 bool update_running) {
    if (x.cols() != state.dim()) {
        throw DimensionError("batchnorm: input has " + std::to_string(x.cols()) +
                             " columns, state normalizes " + std::to_string(state.dim()));
    }
    if (mode == Mode::eval) {
        Matrix y = batchnorm_eval(x, state);
        if (cache) {
            cache->mode = Mode::eval;
            cache->inv_std = (state.running_var.array() + state.epsilon).rsqrt().matrix();
            cache->x_hat = (x.rowwise() - state.running_mean).array().rowwise() * cache->inv_std.array();
        }
        return y;
    }
    const Index n = x.rows();
    if (n < 2) throw ValidationError("batchnorm in train mode needs at least 2 rows, got " + std::to_string(n));
    const RowVector mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const RowVector var = centered.array().square().colwise().sum().matrix() / static_cast<double>(n);
    const RowVector inv_std = (var.array() + state.epsilon).rsqrt().matrix();
    Matrix x_hat = centered.array().rowwise() * inv_std.array();
    Matrix y = (x_hat.array().rowwise() * state.gamma.array()).rowwise() + state.beta.array();
    if (update_running) {
        const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
        state.running_mean = (1.0 - state.momentum) * state.running_mean + state.momentum * mean;
        state.running_var = (1.0 - state.momentum) * state.running_var + state.momentum * unbias * var;
    }
    if (cache) {
        cache->mode = Mode::train;
        cache->inv_std = inv_std;
        cache->x_hat = std::move(x_hat);
    }
    debug_check_finite(y, "batchnorm");
    return y;
}

Matrix batchnorm_eval(const Matrix& x, const BatchNormState& state) {
    if (x.cols() != state.dim()) {
        throw DimensionError("batchnorm: input has " + std::to_string(x.cols()) +
                             " columns, state normalizes " + std::to_string(state.dim()));
    }
    const RowVector inv_std = (state.running_var.array() + state.epsilon).rsqrt().matrix();
    const RowVector scale = inv_std.cwiseProduct(state.gamma);
    Matrix y = ((x.rowwise() - state.running_mean).array().rowwise() * scale.array()).rowwise() +
               state.beta.array();
    debug_check_finite(y, "batchnorm_eval");
    return y;
}

Matrix batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state,
                          const Matrix& grad_out, BatchNormState& grad) {
    grad.gamma += grad_out.cwiseProduct(cache.x_hat).colwise().sum();
    grad.beta += grad_out.colwise().sum();
    const Matrix dx_hat = grad_out.array().rowwise() * state.gamma.array();
    if (cache.mode == Mode::eval) {
        return dx_hat.array().rowwise() * cache.inv_std.array();
    }
    const double n = static_cast<double>(grad_out.rows());
    const RowVector sum_dx_hat = dx_hat.colwise().sum();
    const RowVector sum_dx_hat_xhat = dx_hat.cwiseProduct(cache.x_hat).colwise().sum();
    Matrix dx = (n * dx_hat).rowwise() - sum_dx_hat;
    dx -= (cache.x_hat.array().rowwise() * sum_dx_hat_xhat.array()).matrix();
    return (dx.array().rowwise() * (cache.inv_std.array() / n)).matrix();
}

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

LossGrad soft_cross_entropy(const Matrix& logits, const Matrix& targets,
                            std::span<const double> sample_weights) {
    const Index n = logits.rows();
    if (targets.rows() != n || targets.cols() != logits.cols()) {
        throw DimensionError("soft_cross_entropy: targets " + shape_str(targets.rows(), targets.cols()) +
                             " do not match logits " + shape_str(n, logits.cols()));
    }
    if (static_cast<Index>(sample_weights.size()) != n) {
        throw DimensionError("soft_cross_entropy: expected " + std::to_string(n) + " sample weights, got " +
                             std::to_string(sample_weights.size()));
    }
    if (n == 0) throw ValidationError("soft_cross_entropy: empty batch");
    for (Index i = 0; i < n; ++i) {
        if ((targets.row(i).array() < 0.0).any() || std::abs(targets.row(i).sum() - 1.0) > 1e-6) {
            throw ValidationError("soft_cross_entropy: target row " + std::to_string(i) +
                                  " is not a probability vector");
        }
        if (!(sample_weights[static_cast<std::size_t>(i)] >= 0.0)) {
            throw ValidationError("soft_cross_entropy: negative sample weight at row " + std::to_string(i));
        }
    }
    const double total_weight = pairwise_sum(sample_weights);
    if (!(total_weight > 0.0)) throw ValidationError("soft_cross_entropy: sample weights sum to zero");

    std::vector<double> weighted(static_cast<std::size_t>(n));
    LossGrad out;
    out.grad.resize(n, logits.cols());
    for (Index i = 0; i < n; ++i) {
        const double m = logits.row(i).maxCoeff();
        const auto shifted = (logits.row(i).array() - m).eval();
        const double log_z = std::log(shifted.exp().sum());
        const auto log_p = (shifted - log_z).eval();
        const double w = sample_weights[static_cast<std::size_t>(i)];
        weighted[static_cast<std::size_t>(i)] = -w * (targets.row(i).array() * log_p).sum();
        out.grad.row(i) = (w / total_weight) * (log_p.exp() - targets.row(i).array()).matrix();
    }
    out.loss = pairwise_sum(weighted) / total_weight;
    return out;
}

Matrix one_hot(std::span<const int> labels, Index classes) {
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            throw ValidationError("one_hot: label " + std::to_string(labels[i]) + " out of range");
        }
        y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return y;
}

}  // namespace mint
