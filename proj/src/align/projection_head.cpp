// SPDX-License-Identifier: Apache-2.0
#include "mint/align/projection_head.hpp"

#include "mint/errors.hpp"

#include <cmath>

namespace mint::align {

void ProjectionHeadSpec::validate() const {
    if (dim <= 0 || hidden <= 0) throw ValidationError("projection head widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("projection head dropout must lie in [0, 1)");
    if (!std::isfinite(residual_weight)) throw ValidationError("projection head residual weight must be finite");
}

nlohmann::json ProjectionHeadSpec::to_json() const {
    return {{"dim", dim}, {"hidden", hidden}, {"dropout_rate", dropout_rate}, {"residual_weight", residual_weight}};
}

ProjectionHeadSpec ProjectionHeadSpec::from_json(const nlohmann::json& j) {
    ProjectionHeadSpec s;
    s.dim = j.at("dim").get<Index>();
    s.hidden = j.at("hidden").get<Index>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.residual_weight = j.at("residual_weight").get<double>();
    s.validate();
    return s;
}

ProjectionHead ProjectionHead::build(const ProjectionHeadSpec& spec, std::uint64_t seed) {
    spec.validate();
    ProjectionHead h;
    h.spec_ = spec;
    Rng rng(derive_seed(seed, "align/layer1"));
    h.layer1 = DenseLayer::fan_in_uniform(spec.dim, spec.hidden, rng);
    h.bn = BatchNormState::identity(spec.hidden);
    h.layer2 = DenseLayer::zeros(spec.hidden, spec.dim);
    return h;
}

ProjectionHead ProjectionHead::zeros_like() const {
    ProjectionHead g;
    g.spec_ = spec_;
    g.layer1 = DenseLayer::zeros(spec_.dim, spec_.hidden);
    g.bn = BatchNormState::identity(spec_.hidden);
    g.bn.gamma.setZero();
    g.layer2 = DenseLayer::zeros(spec_.hidden, spec_.dim);
    return g;
}

std::vector<ParamView> ProjectionHead::params() {
    std::vector<ParamView> v;
    layer1.append_params(v, "layer1");
    bn.append_params(v, "bn");
    layer2.append_params(v, "layer2");
    return v;
}

void ProjectionHead::append_params(std::vector<ConstParamView>& out) const {
    layer1.append_params(out, "layer1");
    bn.append_params(out, "bn");
    layer2.append_params(out, "layer2");
}

io::TensorList ProjectionHead::tensors() const {
    io::TensorList t;
    io::append(t, "layer1", layer1);
    io::append(t, "bn", bn);
    io::append(t, "layer2", layer2);
    return t;
}

std::string ProjectionHead::checksum() const { return io::blob_checksum(tensors()); }

ProjectionHead ProjectionHead::from_checkpoint(const io::Checkpoint& ckpt) {
    if (ckpt.manifest.value("component", "") != "projection_head") {
        throw ValidationError("checkpoint is not a projection head");
    }
    ProjectionHead h;
    h.spec_ = ProjectionHeadSpec::from_json(ckpt.manifest.at("architecture"));
    h.layer1 = io::read_dense(ckpt, "layer1");
    h.bn = io::read_batchnorm(ckpt, "bn", 0.1, 1e-5);
    h.layer2 = io::read_dense(ckpt, "layer2");
    if (h.layer1.in_dim() != h.spec_.dim || h.layer1.out_dim() != h.spec_.hidden || h.bn.dim() != h.spec_.hidden ||
        h.layer2.in_dim() != h.spec_.hidden || h.layer2.out_dim() != h.spec_.dim) {
        throw DimensionError("projection head checkpoint tensors disagree with declared architecture");
    }
    return h;
}

Matrix project(const Matrix& z, ProjectionHead& head, ProjectMode mode, Rng* rng, ProjectCache* cache) {
    if (z.cols() != head.spec().dim) {
        throw DimensionError("project: expected " + std::to_string(head.spec().dim) + "-wide input, got " +
                             std::to_string(z.cols()));
    }
    const double rate = head.spec().dropout_rate;
    if (mode.dropout == Mode::train && rate > 0.0 && rng == nullptr) {
        throw ValidationError("project: train-mode dropout needs a random stream");
    }
    ProjectCache local;
    ProjectCache& c = cache ? *cache : local;
    c.z = z;
    c.h1 = dense_forward(z, head.layer1);
    c.bn_out = batchnorm(c.h1, head.bn, mode.batchnorm, &c.bn, mode.update_running);
    c.hidden = gelu(c.bn_out);
    c.mask.resize(0, 0);
    if (mode.dropout == Mode::train && rate > 0.0) {
        DropoutResult d = dropout(c.hidden, rate, Mode::train, *rng);
        c.hidden = std::move(d.output);
        c.mask = std::move(d.mask);
    }
    Matrix out = dense_forward(c.hidden, head.layer2);
    out += head.spec().residual_weight * z;
    debug_check_finite(out, "project");
    return out;
}

Matrix project_eval(const Matrix& z, const ProjectionHead& head) {
    if (z.cols() != head.spec().dim) {
        throw DimensionError("project: expected " + std::to_string(head.spec().dim) + "-wide input, got " +
                             std::to_string(z.cols()));
    }
    Matrix out = dense_forward(gelu(batchnorm_eval(dense_forward(z, head.layer1), head.bn)), head.layer2);
    out += head.spec().residual_weight * z;
    debug_check_finite(out, "project");
    return out;
}

Matrix project_backward(const ProjectCache& cache, const ProjectionHead& head, const Matrix& grad_out,
                        ProjectionHead& grad) {
    Matrix d_hidden = dense_backward(cache.hidden, head.layer2, grad_out, grad.layer2, true);
    if (cache.mask.size() > 0) d_hidden = dropout_backward(cache.mask, d_hidden);
    const Matrix d_bn_out = gelu_backward(cache.bn_out, d_hidden);
    const Matrix d_h1 = batchnorm_backward(cache.bn, head.bn, d_bn_out, grad.bn);
    Matrix dz = dense_backward(cache.z, head.layer1, d_h1, grad.layer1, true);
    dz += head.spec().residual_weight * grad_out;
    return dz;
}

Matrix l2_normalize(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Index r = 0; r < z.rows(); ++r) {
        const double n = z.row(r).norm();
        if (!(n > 1e-12)) throw NumericError("l2_normalize: row " + std::to_string(r) + " has near-zero norm");
        out.row(r) = z.row(r) / n;
    }
    return out;
}

LossGrad align_loss(const Matrix& z_aligned, const Matrix& z_target, AlignWeights weights) {
    if (z_aligned.rows() != z_target.rows() || z_aligned.cols() != z_target.cols()) {
        throw DimensionError("align_loss: shape mismatch");
    }
    if (!(weights.lambda_mse >= 0.0) || !(weights.lambda_cos >= 0.0) ||
        !(weights.lambda_mse + weights.lambda_cos > 0.0)) {
        throw ValidationError("align_loss: loss weights must be non-negative with a positive sum");
    }
    const Index n = z_aligned.rows();
    if (n == 0) throw ValidationError("align_loss: empty batch");
    LossGrad out;
    out.grad.resize(n, z_aligned.cols());
    std::vector<double> per_row(static_cast<std::size_t>(n));
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Index r = 0; r < n; ++r) {
        const double na = z_aligned.row(r).norm();
        const double nb = z_target.row(r).norm();
        if (!(na > 1e-12) || !(nb > 1e-12)) {
            throw NumericError("align_loss: row " + std::to_string(r) + " has near-zero norm");
        }
        const RowVector u = z_aligned.row(r) / na;
        const RowVector v = z_target.row(r) / nb;
        const double cos = u.dot(v);
        per_row[static_cast<std::size_t>(r)] =
            weights.lambda_mse * (u - v).squaredNorm() + weights.lambda_cos * (1.0 - cos);
        const RowVector gu = 2.0 * weights.lambda_mse * (u - v) - weights.lambda_cos * v;
        out.grad.row(r) = inv_n * (gu - gu.dot(u) * u) / na;
    }
    out.loss = pairwise_mean(per_row);
    return out;
}

}  // namespace mint::align
