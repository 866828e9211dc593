// SPDX-License-Identifier: Apache-2.0
#include "mint/align/alignment.hpp"

#include "mint/errors.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/numerics/training.hpp"
#include "mint/speech/finetune.hpp"

#include <cmath>

namespace mint::align {

void AlignConfig::validate() const {
    if (!(lambda_mse >= 0.0) || !(lambda_cos >= 0.0)) throw ValidationError("align loss weights must be non-negative");
    if (!(lambda_mse + lambda_cos > 0.0)) throw ValidationError("align.lambda_mse + align.lambda_cos must be positive");
    if (!(lr > 0.0)) throw ValidationError("align.lr must be positive");
    if (epochs < 1 || epochs > 200) throw ValidationError("align.epochs must lie in [1, 200]");
    if (patience < 1) throw ValidationError("align.patience must be positive");
    if (batch_size < 2) throw ValidationError("align.batch_size must be at least 2");
}

nlohmann::json AlignConfig::to_json() const {
    return {{"lambda_mse", lambda_mse}, {"lambda_cos", lambda_cos}, {"lr", lr},  {"epochs", epochs},
            {"patience", patience},     {"batch_size", batch_size}, {"t0", t0}};
}

namespace {

double speech_auc(const Matrix& zs, std::span<const int> labels, const ProjectionHead& head,
                  const teacher::Teacher& teacher) {
    const Matrix logits = teacher::classify_embedding(project_eval(zs, head), teacher);
    return eval::auc_roc(speech::positive_probability(logits), labels);
}

}  // namespace

AlignResult fit_projection_head(const Matrix& zs_train, const Matrix& zm_train, const Matrix& zs_val,
                                const Matrix& zm_val, std::span<const int> val_labels, const teacher::Teacher& teacher,
                                ProjectionHead& head, const AlignConfig& config, std::uint64_t seed,
                                const EpochHook& hook) {
    config.validate();
    if (zs_train.rows() != zm_train.rows() || zs_val.rows() != zm_val.rows() ||
        zs_val.rows() != static_cast<Index>(val_labels.size())) {
        throw DimensionError("fit_projection_head: paired row counts disagree");
    }
    GroupedAdamW opt(config.adamw, config.t0, "align");
    opt.add_group("projection_head", head.params(), config.lr);
    Rng batch_rng(derive_seed(seed, "align/batches"));
    Rng drop_rng(derive_seed(seed, "align/dropout"));
    EarlyStopping stopper(config.patience, true);
    AlignResult result;
    result.initial_val_loss = align_loss(project_eval(zs_val, head), zm_val, config.weights()).loss;
    ProjectionHead best = head;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = make_batches(static_cast<std::size_t>(zs_train.rows()), config.batch_size, batch_rng);
        std::vector<double> losses;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Matrix zs = gather_rows(zs_train, batches[b]);
            const Matrix zm = gather_rows(zm_train, batches[b]);
            ProjectCache cache;
            const Matrix out = project(zs, head, ProjectMode::train(), &drop_rng, &cache);
            const LossGrad lg = align_loss(out, zm, config.weights());
            if (!std::isfinite(lg.loss)) {
                throw NumericError("align: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            ProjectionHead grad = head.zeros_like();
            project_backward(cache, head, lg.grad, grad);
            std::vector<ConstParamView> g;
            grad.append_params(g);
            opt.step({g}, epoch);
            losses.push_back(lg.loss);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.group("projection_head").schedule.lr_at(epoch);
        rec.train_loss = pairwise_mean(losses);
        rec.val_loss = align_loss(project_eval(zs_val, head), zm_val, config.weights()).loss;
        rec.val_auc = speech_auc(zs_val, val_labels, head, teacher);
        result.history.push_back(rec);
        if (stopper.update(epoch, rec.val_auc, rec.val_loss)) best = head;
        if (hook && hook(epoch, rec.val_auc)) {
            result.stopped_by_hook = true;
            break;
        }
        if (stopper.should_stop()) break;
    }
    head = std::move(best);
    result.best_epoch = stopper.best_epoch();
    result.best_val_auc = stopper.best_metric();
    result.best_val_loss = stopper.best_loss();
    return result;
}

AlignmentRun train_alignment(const Matrix& speech_train, const Matrix& mri_train, const Matrix& speech_val,
                             const Matrix& mri_val, std::span<const int> val_labels,
                             const speech::SpeechStack& encoder, const teacher::Teacher& teacher,
                             ProjectionHead& head, const AlignConfig& config, std::uint64_t seed,
                             const EpochHook& hook) {
    if (!encoder.frozen()) throw DependencyError("align: speech encoder must be frozen before Stage 3");
    if (!teacher.frozen()) throw DependencyError("align: teacher must be frozen before Stage 3");
    teacher.verify();
    AlignmentRun run;
    run.before = {encoder.checksum(), teacher.checksum()};

    const Matrix zs_train = speech::encode_speech(speech_train, encoder);
    const Matrix zm_train = teacher::embed_mri(mri_train, teacher);
    const Matrix zs_val = speech::encode_speech(speech_val, encoder);
    const Matrix zm_val = teacher::embed_mri(mri_val, teacher);
    run.fit = fit_projection_head(zs_train, zm_train, zs_val, zm_val, val_labels, teacher, head, config, seed, hook);

    run.after = {encoder.checksum(), teacher.checksum()};
    if (run.after.encoder != run.before.encoder) {
        throw ChecksumError("align: speech encoder checksum drifted during Stage 3");
    }
    if (run.after.teacher != run.before.teacher) throw ChecksumError("align: teacher checksum drifted during Stage 3");
    teacher.verify();
    return run;
}

nlohmann::json head_manifest(const ProjectionHead& head, const AlignConfig& config, const FrozenChecksums& refs) {
    return {{"stage", "projection_head"},
            {"component", "projection_head"},
            {"architecture", head.spec().to_json()},
            {"align", config.to_json()},
            {"encoder_checksum", refs.encoder},
            {"teacher_checksum", refs.teacher}};
}

}  // namespace mint::align
