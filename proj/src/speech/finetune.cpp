// SPDX-License-Identifier: Apache-2.0
#include "mint/speech/finetune.hpp"

#include "mint/data/augment.hpp"
#include "mint/data/split.hpp"
#include "mint/errors.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/numerics/layers.hpp"
#include "mint/numerics/training.hpp"

#include <cmath>

namespace mint::speech {

void FinetuneConfig::validate() const {
    if (epochs < 1 || epochs > 200) throw ValidationError("finetune.epochs must lie in [1, 200]");
    if (patience < 1) throw ValidationError("finetune.patience must be positive");
    if (batch_size < 2) throw ValidationError("finetune.batch_size must be at least 2");
    if (!(head_lr > 0.0) || !(encoder_lr > 0.0)) throw ValidationError("finetune learning rates must be positive");
    if (use_mixup && !(mixup_alpha > 0.0)) throw ValidationError("finetune.mixup_alpha must be positive when mixup is on");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
        throw ValidationError("finetune.label_smoothing must lie in [0, 1)");
    }
}

nlohmann::json FinetuneConfig::to_json() const {
    return {{"epochs", epochs},
            {"patience", patience},
            {"batch_size", batch_size},
            {"head_lr", head_lr},
            {"encoder_lr", encoder_lr},
            {"use_mixup", use_mixup},
            {"mixup_alpha", mixup_alpha},
            {"label_smoothing", label_smoothing},
            {"class_weighting", class_weighting},
            {"from_scratch", from_scratch},
            {"t0", t0}};
}

FinetuneBatch build_finetune_batch(const Matrix& x, std::span<const int> labels, const std::array<double, 2>& class_w,
                                   const FinetuneConfig& config, Rng& rng) {
    if (static_cast<Index>(labels.size()) != x.rows()) throw DimensionError("finetune batch: label count mismatch");
    FinetuneBatch out;
    Matrix y = one_hot(labels, 2);
    if (config.use_mixup) {
        auto mixed = data::mixup_batch(x, y, config.mixup_alpha, rng);
        out.x = std::move(mixed.x);
        y = std::move(mixed.y);
    } else {
        out.x = x;
    }
    out.weights.resize(static_cast<std::size_t>(y.rows()));
    for (Index r = 0; r < y.rows(); ++r) {
        out.weights[static_cast<std::size_t>(r)] = y(r, 0) * class_w[0] + y(r, 1) * class_w[1];
    }
    out.targets = config.label_smoothing > 0.0 ? data::smooth_labels(y, config.label_smoothing) : y;
    return out;
}

std::vector<double> positive_probability(const Matrix& logits) {
    const Matrix p = softmax(logits);
    std::vector<double> out(static_cast<std::size_t>(p.rows()));
    for (Index r = 0; r < p.rows(); ++r) out[static_cast<std::size_t>(r)] = p(r, 1);
    return out;
}

GroupedAdamW make_finetune_optimizer(SpeechStack& stack, const FinetuneConfig& config) {
    GroupedAdamW opt(config.adamw, config.t0, "finetune");
    opt.add_group("head", stack.head_params(), config.head_lr);
    opt.add_group("encoder", stack.encoder_params(), config.encoder_lr);
    return opt;
}

FinetuneResult finetune_speech(const Matrix& train_raw, std::span<const int> train_labels, const Matrix& val_raw,
                               std::span<const int> val_labels, SpeechStack& stack, const FinetuneConfig& config,
                               std::uint64_t seed, const EpochHook& hook) {
    config.validate();
    if (!stack.pretrained() && !config.from_scratch) {
        throw DependencyError("finetune: speech encoder has not been pretrained (set from_scratch to override)");
    }
    if (train_raw.rows() != static_cast<Index>(train_labels.size()) ||
        val_raw.rows() != static_cast<Index>(val_labels.size())) {
        throw DimensionError("finetune: label count mismatch");
    }
    if (train_raw.cols() != stack.arch().input_dim || val_raw.cols() != stack.arch().input_dim) {
        throw DimensionError("finetune: speech feature width mismatch");
    }
    if (!stack.has_standardizer()) stack.set_standardizer(data::Standardizer::fit(train_raw));

    Rng head_rng(derive_seed(seed, "finetune/head"));
    stack.mutable_head() = DenseLayer::fan_in_uniform(stack.arch().bottleneck, 2, head_rng);

    const Matrix train_x = stack.standardizer().apply(train_raw);
    const Matrix val_x = stack.standardizer().apply(val_raw);
    const std::array<double, 2> class_w =
        config.class_weighting ? data::class_weights(train_labels) : std::array<double, 2>{1.0, 1.0};
    std::vector<double> val_w(val_labels.size());
    for (std::size_t i = 0; i < val_labels.size(); ++i) val_w[i] = class_w[static_cast<std::size_t>(val_labels[i])];
    const Matrix val_targets = one_hot(val_labels, 2);

    GroupedAdamW opt = make_finetune_optimizer(stack, config);
    Rng batch_rng(derive_seed(seed, "finetune/batches"));
    Rng mix_rng(derive_seed(seed, "finetune/mixup"));
    EarlyStopping stopper(config.patience, true);
    FinetuneResult result;
    Mlp best_enc = stack.encoder();
    DenseLayer best_head = stack.head();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = make_batches(static_cast<std::size_t>(train_x.rows()), config.batch_size, batch_rng);
        std::vector<double> losses;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& rows = batches[b];
            std::vector<int> y(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) y[i] = train_labels[rows[i]];
            const FinetuneBatch batch = build_finetune_batch(gather_rows(train_x, rows), y, class_w, config, mix_rng);

            Mlp::Cache enc_cache;
            const Matrix z = stack.encoder().forward(batch.x, Mode::train, nullptr, &enc_cache);
            const Matrix logits = dense_forward(z, stack.head());
            const LossGrad lg = soft_cross_entropy(logits, batch.targets, batch.weights);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("finetune: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            DenseLayer head_grad = DenseLayer::zeros(stack.head().in_dim(), stack.head().out_dim());
            const Matrix dz = dense_backward(z, stack.head(), lg.grad, head_grad, true);
            Mlp enc_grad = stack.encoder().zeros_like();
            stack.encoder().backward(enc_cache, dz, enc_grad, false);
            std::vector<ConstParamView> hg;
            std::vector<ConstParamView> eg;
            head_grad.append_params(hg, "head");
            enc_grad.append_params(eg, "encoder");
            opt.step({hg, eg}, epoch);
            losses.push_back(lg.loss);
        }
        const Matrix val_logits = dense_forward(stack.encoder().forward_eval(val_x), stack.head());
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.group("head").schedule.lr_at(epoch);
        rec.train_loss = pairwise_mean(losses);
        rec.val_loss = soft_cross_entropy(val_logits, val_targets, val_w).loss;
        rec.val_auc = eval::auc_roc(positive_probability(val_logits), val_labels);
        result.history.push_back(rec);
        if (stopper.update(epoch, rec.val_auc, rec.val_loss)) {
            best_enc = stack.encoder();
            best_head = stack.head();
        }
        if (hook && hook(epoch, rec.val_auc)) {
            result.stopped_by_hook = true;
            break;
        }
        if (stopper.should_stop()) break;
    }
    stack.mutable_encoder() = std::move(best_enc);
    stack.mutable_head() = std::move(best_head);
    result.best_epoch = stopper.best_epoch();
    result.best_val_auc = stopper.best_metric();
    result.best_val_loss = stopper.best_loss();
    return result;
}

}  // namespace mint::speech
