// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/io/checkpoint.hpp"
#include "mint/numerics/layers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace mint::align {

struct ProjectionHeadSpec {
    Index dim = 128;
    Index hidden = 96;
    double dropout_rate = 0.6;
    double residual_weight = 0.1;

    void validate() const;
    nlohmann::json to_json() const;
    static ProjectionHeadSpec from_json(const nlohmann::json& j);
};

// f(z) = layer2(dropout(gelu(bn(layer1(z))))) + residual_weight * z.
class ProjectionHead {
public:
    ProjectionHead() = default;
    // layer1 fan-in uniform, layer2 all zeros.
    static ProjectionHead build(const ProjectionHeadSpec& spec, std::uint64_t seed);
    ProjectionHead zeros_like() const;

    const ProjectionHeadSpec& spec() const { return spec_; }
    DenseLayer layer1;
    BatchNormState bn;
    DenseLayer layer2;

    std::vector<ParamView> params();
    void append_params(std::vector<ConstParamView>& out) const;

    io::TensorList tensors() const;
    std::string checksum() const;
    static ProjectionHead from_checkpoint(const io::Checkpoint& ckpt);

private:
    ProjectionHeadSpec spec_;
};

// Batch-norm and dropout behaviour can be chosen separately so that gradcheck
// can run batch statistics with dropout switched off.
struct ProjectMode {
    Mode batchnorm = Mode::eval;
    Mode dropout = Mode::eval;
    bool update_running = false;

    static ProjectMode train() { return {Mode::train, Mode::train, true}; }
    static ProjectMode eval() { return {}; }
};

struct ProjectCache {
    Matrix z;
    Matrix h1;
    BatchNormCache bn;
    Matrix bn_out;
    Matrix mask;
    Matrix hidden;
};

Matrix project(const Matrix& z, ProjectionHead& head, ProjectMode mode, Rng* rng, ProjectCache* cache);
Matrix project_eval(const Matrix& z, const ProjectionHead& head);

// Accumulates parameter gradients into `grad`; returns dL/dz including the
// residual_weight * I path.
Matrix project_backward(const ProjectCache& cache, const ProjectionHead& head, const Matrix& grad_out,
                        ProjectionHead& grad);

// Row-wise unit scaling; rows with norm <= 1e-12 are rejected.
Matrix l2_normalize(const Matrix& z);

struct AlignWeights {
    double lambda_mse = 1.0;
    double lambda_cos = 1.0;
};

// Mean over rows of lambda_mse ||u - v||^2 + lambda_cos (1 - u.v) with u, v the
// l2-normalized rows. Gradient is with respect to the first argument.
LossGrad align_loss(const Matrix& z_aligned, const Matrix& z_target, AlignWeights weights);

}  // namespace mint::align
