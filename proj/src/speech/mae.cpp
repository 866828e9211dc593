// SPDX-License-Identifier: Apache-2.0
#include "mint/speech/mae.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mint::speech {

std::size_t MaskSpec::masked_count(std::size_t dim) const {
    const auto m = static_cast<std::size_t>(std::llround(mask_ratio * static_cast<double>(dim)));
    if (m == 0 || m >= dim) {
        throw ValidationError("mask ratio " + std::to_string(mask_ratio) + " masks " + std::to_string(m) + " of " +
                              std::to_string(dim) + " features; need between 1 and " + std::to_string(dim - 1));
    }
    return m;
}

MaskedBatch mask_features(const Matrix& x, const MaskSpec& spec, Rng& rng) {
    const auto dim = static_cast<std::size_t>(x.cols());
    const std::size_t m = spec.masked_count(dim);
    MaskedBatch out{x, MaskSets(static_cast<std::size_t>(x.rows()))};
    std::vector<std::size_t> pool(dim);
    for (Index r = 0; r < x.rows(); ++r) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        // Partial Fisher-Yates: the first m slots become a uniform m-subset.
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, dim - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        auto& set = out.masks[static_cast<std::size_t>(r)];
        set.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(set.begin(), set.end());
        for (std::size_t j : set) out.x(r, static_cast<Index>(j)) = spec.fill_value;
    }
    return out;
}

LossGrad mae_loss(const Matrix& x, const Matrix& x_hat, const MaskSets& masks, double lambda_c) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw DimensionError("mae_loss: shape mismatch");
    if (static_cast<Index>(masks.size()) != x.rows()) throw DimensionError("mae_loss: one mask set per row required");
    if (!(lambda_c >= 0.0)) throw ValidationError("mae_loss: lambda_c must be non-negative");
    const Index n = x.rows();
    if (n == 0) throw ValidationError("mae_loss: empty batch");
    LossGrad out;
    out.grad = Matrix::Zero(n, x.cols());
    std::vector<double> per_row(static_cast<std::size_t>(n));
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Index r = 0; r < n; ++r) {
        const auto& set = masks[static_cast<std::size_t>(r)];
        if (set.empty()) throw ValidationError("mae_loss: empty mask set at row " + std::to_string(r));
        const double inv_m = 1.0 / static_cast<double>(set.size());
        double mse = 0.0;
        for (std::size_t j : set) {
            const auto c = static_cast<Index>(j);
            const double d = x(r, c) - x_hat(r, c);
            mse += d * d;
            out.grad(r, c) = -2.0 * d * inv_m * inv_n;
        }
        double loss = mse * inv_m;
        if (lambda_c > 0.0) {
            const double nx = x.row(r).norm();
            const double nh = x_hat.row(r).norm();
            if (!(nx > 0.0) || !(nh > 0.0)) {
                throw NumericError("mae_loss: zero-norm vector in cosine term at row " + std::to_string(r));
            }
            const double dot = x.row(r).dot(x_hat.row(r));
            const double cos = dot / (nx * nh);
            // 1 - cos as half the squared distance of the unit vectors, exactly 0 at x_hat = x.
            loss += lambda_c * 0.5 * (x.row(r) / nx - x_hat.row(r) / nh).squaredNorm();
            // d(cos)/d(xhat) = x / (|x||xhat|) - cos * xhat / |xhat|^2
            out.grad.row(r) -= lambda_c * inv_n * (x.row(r) / (nx * nh) - cos * x_hat.row(r) / (nh * nh));
        }
        per_row[static_cast<std::size_t>(r)] = loss;
    }
    out.loss = pairwise_mean(per_row);
    return out;
}

void MaeConfig::validate() const {
    if (!(lambda_c >= 0.0)) throw ValidationError("mae.lambda_c must be non-negative");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ValidationError("mae.mask_ratio must lie in (0, 1)");
    if (epochs < 1 || epochs > 200) throw ValidationError("mae.epochs must lie in [1, 200]");
    if (batch_size == 0) throw ValidationError("mae.batch_size must be positive");
    if (!(lr > 0.0)) throw ValidationError("mae.lr must be positive");
    if (patience < 1) throw ValidationError("mae.patience must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("mae.val_fraction must lie in (0, 1)");
}

nlohmann::json MaeConfig::to_json() const {
    return {{"lambda_c", lambda_c}, {"mask_ratio", mask_ratio}, {"epochs", epochs},      {"batch_size", batch_size},
            {"lr", lr},             {"patience", patience},     {"val_fraction", val_fraction}, {"t0", t0},
            {"weight_decay", adamw.weight_decay}};
}

namespace {

struct Reconstruction {
    Matrix x_hat;
    Mlp::Cache enc;
    Mlp::Cache dec;
};

Reconstruction reconstruct(const SpeechStack& stack, const Matrix& masked, bool keep_cache) {
    Reconstruction r;
    const Matrix z = stack.encoder().forward(masked, Mode::train, nullptr, keep_cache ? &r.enc : nullptr);
    r.x_hat = stack.decoder().forward(z, Mode::train, nullptr, keep_cache ? &r.dec : nullptr);
    return r;
}

struct HeldOut {
    double loss = 0.0;
    double reconstruction = 0.0;
};

HeldOut evaluate(const SpeechStack& stack, const Matrix& x, const MaskedBatch& masked, double lambda_c) {
    const Matrix x_hat = stack.decoder().forward_eval(stack.encoder().forward_eval(masked.x));
    const double mse = mae_loss(x, x_hat, masked.masks, 0.0).loss;
    return {lambda_c > 0.0 ? mae_loss(x, x_hat, masked.masks, lambda_c).loss : mse, mse};
}

}  // namespace

MaeResult pretrain_mae(const Matrix& unlabeled_raw, SpeechStack& stack, const MaeConfig& config, std::uint64_t seed,
                       const EpochHook& hook) {
    config.validate();
    if (unlabeled_raw.cols() != stack.arch().input_dim) throw DimensionError("pretrain_mae: speech feature width mismatch");
    if (unlabeled_raw.rows() < 10) throw ValidationError("pretrain_mae: need at least 10 unlabeled samples");

    stack.set_standardizer(data::Standardizer::fit(unlabeled_raw));
    const Matrix pool = stack.standardizer().apply(unlabeled_raw);

    Rng split_rng(derive_seed(seed, "mae/holdout"));
    std::vector<std::size_t> order(static_cast<std::size_t>(pool.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(order.size()))));
    std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    const Matrix val_x = gather_rows(pool, val_rows);
    const Matrix train_x = gather_rows(pool, train_rows);

    const MaskSpec mask{config.mask_ratio, 0.0};
    Rng val_mask_rng(derive_seed(seed, "mae/val_masks"));
    const MaskedBatch val_masked = mask_features(val_x, mask, val_mask_rng);

    auto enc_params = stack.encoder_params();
    auto dec_params = stack.decoder_params();
    GroupedAdamW opt(config.adamw, config.t0, "mae");
    opt.add_group("encoder", enc_params, config.lr);
    opt.add_group("decoder", dec_params, config.lr);

    Rng batch_rng(derive_seed(seed, "mae/batches"));
    Rng mask_rng(derive_seed(seed, "mae/masks"));
    EarlyStopping stopper(config.patience, false);
    MaeResult result;
    result.initial_val_loss = evaluate(stack, val_x, val_masked, config.lambda_c).loss;
    Mlp best_enc = stack.encoder();
    Mlp best_dec = stack.decoder();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = make_batches(static_cast<std::size_t>(train_x.rows()), config.batch_size, batch_rng);
        std::vector<double> batch_losses;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Matrix x = gather_rows(train_x, batches[b]);
            const MaskedBatch masked = mask_features(x, mask, mask_rng);
            Reconstruction rec = reconstruct(stack, masked.x, true);
            const LossGrad lg = mae_loss(x, rec.x_hat, masked.masks, config.lambda_c);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("mae: non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            }
            Mlp enc_grad = stack.encoder().zeros_like();
            Mlp dec_grad = stack.decoder().zeros_like();
            const Matrix dz = stack.decoder().backward(rec.dec, lg.grad, dec_grad, true);
            stack.encoder().backward(rec.enc, dz, enc_grad, false);
            std::vector<ConstParamView> eg;
            std::vector<ConstParamView> dg;
            enc_grad.append_params(eg, "encoder");
            dec_grad.append_params(dg, "decoder");
            opt.step({eg, dg}, epoch);
            batch_losses.push_back(lg.loss);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.groups().front().schedule.lr_at(epoch);
        rec.train_loss = pairwise_mean(batch_losses);
        const HeldOut held = evaluate(stack, val_x, val_masked, config.lambda_c);
        rec.val_loss = held.loss;
        result.val_reconstruction.push_back(held.reconstruction);
        if (!std::isfinite(rec.val_loss)) throw NumericError("mae: non-finite validation loss at epoch " + std::to_string(epoch));
        result.history.push_back(rec);
        if (stopper.update(epoch, rec.val_loss, rec.val_loss)) {
            best_enc = stack.encoder();
            best_dec = stack.decoder();
            result.best_val_reconstruction = held.reconstruction;
        }
        if (hook && hook(epoch, held.reconstruction)) {
            result.stopped_by_hook = true;
            break;
        }
        if (stopper.should_stop()) break;
    }
    stack.mutable_encoder() = std::move(best_enc);
    stack.mutable_decoder() = std::move(best_dec);
    stack.mark_pretrained();
    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_metric();
    return result;
}

}  // namespace mint::speech
