// SPDX-License-Identifier: Apache-2.0
#include "mint/teacher/teacher.hpp"

#include "mint/data/split.hpp"
#include "mint/errors.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/numerics/layers.hpp"
#include "mint/numerics/training.hpp"
#include "mint/speech/finetune.hpp"

#include <cmath>
#include <map>

namespace mint::teacher {

void TeacherArchSpec::validate() const {
    if (bottleneck != kBiomarkerDim) throw ValidationError("teacher bottleneck must be 128");
    if (hidden_widths.empty()) throw ValidationError("teacher needs at least one hidden width");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("teacher dropout must lie in [0, 1)");
    Index prev = input_dim;
    for (Index w : hidden_widths) {
        if (!(w < prev)) {
            throw ValidationError("teacher widths must strictly decrease: " + std::to_string(w) + " follows " +
                                  std::to_string(prev));
        }
        prev = w;
    }
    if (!(prev > bottleneck)) {
        throw ValidationError("last teacher hidden width " + std::to_string(prev) + " must exceed " +
                              std::to_string(bottleneck));
    }
}

std::vector<Index> TeacherArchSpec::projection_widths() const {
    std::vector<Index> w{input_dim};
    w.insert(w.end(), hidden_widths.begin(), hidden_widths.end());
    w.push_back(bottleneck);
    return w;
}

nlohmann::json TeacherArchSpec::to_json() const {
    return {{"input_dim", input_dim}, {"hidden_widths", hidden_widths}, {"dropout_rate", dropout_rate},
            {"bottleneck", bottleneck}};
}

TeacherArchSpec TeacherArchSpec::from_json(const nlohmann::json& j) {
    TeacherArchSpec s;
    s.input_dim = j.at("input_dim").get<Index>();
    s.hidden_widths = j.at("hidden_widths").get<std::vector<Index>>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.bottleneck = j.at("bottleneck").get<Index>();
    s.validate();
    return s;
}

Teacher Teacher::build(const TeacherArchSpec& spec, std::uint64_t seed) {
    spec.validate();
    Teacher t;
    t.spec_ = spec;
    Rng proj_rng(derive_seed(seed, "teacher/projection"));
    Rng cls_rng(derive_seed(seed, "teacher/classifier"));
    t.projection_ = Mlp::init(spec.projection_widths(), true, spec.dropout_rate, proj_rng);
    t.classifier_ = DenseLayer::fan_in_uniform(spec.bottleneck, 2, cls_rng);
    return t;
}

void Teacher::require_mutable(const char* what) const {
    if (frozen()) throw FrozenError(std::string("teacher is frozen; cannot modify ") + what);
}

Mlp& Teacher::mutable_projection() {
    require_mutable("projection");
    return projection_;
}

DenseLayer& Teacher::mutable_classifier() {
    require_mutable("classifier");
    return classifier_;
}

void Teacher::set_standardizer(data::Standardizer s) {
    require_mutable("standardization");
    if (s.dim() != spec_.input_dim) throw DimensionError("standardizer width does not match MRI input");
    standardizer_ = std::move(s);
}

std::vector<ParamView> Teacher::params() {
    require_mutable("parameters");
    std::vector<ParamView> v;
    projection_.append_params(v, "projection", &flag_);
    classifier_.append_params(v, "classifier", &flag_);
    return v;
}

void Teacher::freeze() {
    if (frozen()) return;
    frozen_checksum_ = checksum();
    flag_.set();
}

void Teacher::verify() const {
    if (!frozen()) throw DependencyError("teacher has not been frozen");
    const std::string now = checksum();
    if (now != frozen_checksum_) {
        throw ChecksumError("teacher parameters drifted: frozen " + frozen_checksum_ + ", now " + now);
    }
}

io::TensorList Teacher::tensors() const {
    io::TensorList t;
    if (has_standardizer()) {
        io::append(t, "standardizer.mean", standardizer_.mean);
        io::append(t, "standardizer.std", standardizer_.std);
    }
    io::append(t, "projection", projection_);
    io::append(t, "classifier", classifier_);
    return t;
}

std::string Teacher::checksum() const { return io::blob_checksum(tensors()); }

nlohmann::json Teacher::manifest() const {
    return {{"stage", "teacher"},
            {"component", "teacher"},
            {"architecture", spec_.to_json()},
            {"frozen", frozen()},
            {"standardization", {{"present", has_standardizer()}}}};
}

Teacher Teacher::from_checkpoint(const io::Checkpoint& ckpt) {
    const auto& m = ckpt.manifest;
    if (m.value("component", "") != "teacher") throw ValidationError("checkpoint is not a teacher");
    Teacher t;
    t.spec_ = TeacherArchSpec::from_json(m.at("architecture"));
    t.projection_ = io::read_mlp(ckpt, "projection", t.spec_.hidden_widths.size() + 1, true, t.spec_.dropout_rate);
    t.classifier_ = io::read_dense(ckpt, "classifier");
    if (t.projection_.widths() != t.spec_.projection_widths() || t.classifier_.in_dim() != t.spec_.bottleneck ||
        t.classifier_.out_dim() != 2) {
        throw DimensionError("teacher checkpoint tensors disagree with declared architecture");
    }
    if (m.at("standardization").at("present").get<bool>()) {
        t.standardizer_.mean = ckpt.row_vector("standardizer.mean");
        t.standardizer_.std = ckpt.row_vector("standardizer.std");
    }
    if (m.value("frozen", false)) t.freeze();
    return t;
}

Matrix embed_mri(const Matrix& raw, const Teacher& teacher) {
    if (raw.cols() != teacher.spec().input_dim) {
        throw DimensionError("embed_mri: expected " + std::to_string(teacher.spec().input_dim) + " MRI features, got " +
                             std::to_string(raw.cols()));
    }
    if (!teacher.has_standardizer()) throw DependencyError("embed_mri: teacher has no standardization statistics");
    return teacher.projection().forward_eval(teacher.standardizer().apply(raw));
}

Matrix classify_embedding(const Matrix& z, const Teacher& teacher) {
    if (z.cols() != kBiomarkerDim) {
        throw DimensionError("classify_embedding: expected 128-wide embeddings, got " + std::to_string(z.cols()));
    }
    return dense_forward(z, teacher.classifier());
}

void TeacherConfig::validate() const {
    if (epochs < 1 || epochs > 200) throw ValidationError("teacher.epochs must lie in [1, 200]");
    if (patience < 1) throw ValidationError("teacher.patience must be positive");
    if (batch_size < 2) throw ValidationError("teacher.batch_size must be at least 2");
    if (!(lr > 0.0)) throw ValidationError("teacher.lr must be positive");
    if (cv_folds == 1 || cv_folds < 0) throw ValidationError("teacher.cv_folds must be 0 or at least 2");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("teacher.val_fraction must lie in (0, 1)");
}

nlohmann::json TeacherConfig::to_json() const {
    return {{"epochs", epochs}, {"patience", patience},         {"batch_size", batch_size},
            {"lr", lr},         {"class_weighting", class_weighting}, {"cv_folds", cv_folds},
            {"val_fraction", val_fraction}, {"t0", t0}};
}

nlohmann::json TeacherReport::to_json() const {
    return {{"best_epoch", fit.best_epoch}, {"best_val_auc", fit.best_val_auc}, {"best_val_loss", fit.best_val_loss},
            {"cv_aucs", cv_aucs},           {"cv_mean", cv_mean},                {"cv_std", cv_std},
            {"fold_digest", fold_digest},   {"history", history_json(fit.history)}};
}

TeacherFitResult fit_teacher(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                             std::span<const int> val_y, Teacher& teacher, const TeacherConfig& config,
                             std::uint64_t seed, const EpochHook& hook) {
    config.validate();
    if (train_x.rows() != static_cast<Index>(train_y.size()) || val_x.rows() != static_cast<Index>(val_y.size())) {
        throw DimensionError("fit_teacher: label count mismatch");
    }
    const std::array<double, 2> class_w =
        config.class_weighting ? data::class_weights(train_y) : std::array<double, 2>{1.0, 1.0};
    const Matrix val_targets = one_hot(val_y, 2);
    std::vector<double> val_w(val_y.size());
    for (std::size_t i = 0; i < val_y.size(); ++i) val_w[i] = class_w[static_cast<std::size_t>(val_y[i])];

    GroupedAdamW opt(config.adamw, config.t0, "teacher");
    opt.add_group("teacher", teacher.params(), config.lr);
    Rng batch_rng(derive_seed(seed, "teacher/batches"));
    Rng drop_rng(derive_seed(seed, "teacher/dropout"));
    EarlyStopping stopper(config.patience, true);
    TeacherFitResult result;
    Mlp best_proj = teacher.projection();
    DenseLayer best_cls = teacher.classifier();
    Mlp proj_grad = teacher.projection().zeros_like();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto batches = make_batches(static_cast<std::size_t>(train_x.rows()), config.batch_size, batch_rng);
        std::vector<double> losses;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& rows = batches[b];
            std::vector<int> y(rows.size());
            std::vector<double> w(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                y[i] = train_y[rows[i]];
                w[i] = class_w[static_cast<std::size_t>(y[i])];
            }
            const Matrix x = gather_rows(train_x, rows);
            Mlp::Cache cache;
            const Matrix z = teacher.projection().forward(x, Mode::train, &drop_rng, &cache);
            const Matrix logits = dense_forward(z, teacher.classifier());
            const LossGrad lg = soft_cross_entropy(logits, one_hot(y, 2), w);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("teacher: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            DenseLayer cls_grad = DenseLayer::zeros(teacher.classifier().in_dim(), 2);
            const Matrix dz = dense_backward(z, teacher.classifier(), lg.grad, cls_grad, true);
            proj_grad.set_zero();
            teacher.projection().backward(cache, dz, proj_grad, false);
            std::vector<ConstParamView> g;
            proj_grad.append_params(g, "projection");
            cls_grad.append_params(g, "classifier");
            opt.step({g}, epoch);
            losses.push_back(lg.loss);
        }
        const Matrix val_logits = dense_forward(teacher.projection().forward_eval(val_x), teacher.classifier());
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.group("teacher").schedule.lr_at(epoch);
        rec.train_loss = pairwise_mean(losses);
        rec.val_loss = soft_cross_entropy(val_logits, val_targets, val_w).loss;
        rec.val_auc = eval::auc_roc(speech::positive_probability(val_logits), val_y);
        result.history.push_back(rec);
        if (stopper.update(epoch, rec.val_auc, rec.val_loss)) {
            best_proj = teacher.projection();
            best_cls = teacher.classifier();
        }
        if (hook && hook(epoch, rec.val_auc)) {
            result.stopped_by_hook = true;
            break;
        }
        if (stopper.should_stop()) break;
    }
    teacher.mutable_projection() = std::move(best_proj);
    teacher.mutable_classifier() = std::move(best_cls);
    result.best_epoch = stopper.best_epoch();
    result.best_val_auc = stopper.best_metric();
    result.best_val_loss = stopper.best_loss();
    return result;
}

namespace {

bool single_class(std::span<const int> y) {
    for (int v : y) {
        if (v != y.front()) return false;
    }
    return true;
}

}  // namespace

TeacherReport train_teacher(const data::Cohort& mri_cohort, Teacher& teacher, const TeacherConfig& config,
                            std::uint64_t seed, const EpochHook& hook) {
    config.validate();
    const auto ids = mri_cohort.labeled_ids();
    const auto labels = data::class_labels(mri_cohort, ids);
    const auto split = data::stratified_split(ids, labels, {1.0 - config.val_fraction, config.val_fraction, 0.0},
                                              derive_seed(seed, "teacher/split"));
    const Matrix train_raw = data::mri_matrix(mri_cohort, split.train_ids);
    teacher.set_standardizer(data::Standardizer::fit(train_raw));
    const Matrix train_x = teacher.standardizer().apply(train_raw);
    const Matrix val_x = teacher.standardizer().apply(data::mri_matrix(mri_cohort, split.val_ids));
    const auto train_y = data::class_labels(mri_cohort, split.train_ids);
    const auto val_y = data::class_labels(mri_cohort, split.val_ids);

    TeacherReport report;
    if (config.cv_folds > 0) {
        const auto folds = data::stratified_kfold(split.train_ids, train_y, config.cv_folds, derive_seed(seed, "teacher/cv"));
        report.fold_digest = folds.digest();
        // Row lookup back into train_x.
        std::map<std::string, std::size_t> row_of;
        for (std::size_t i = 0; i < split.train_ids.size(); ++i) row_of[split.train_ids[i]] = i;
        for (int f = 0; f < config.cv_folds; ++f) {
            std::vector<std::size_t> tr;
            std::vector<std::size_t> ho;
            for (const auto& id : folds.train_ids(f)) tr.push_back(row_of.at(id));
            for (const auto& id : folds.fold_ids(f)) ho.push_back(row_of.at(id));
            std::vector<int> tr_y;
            std::vector<int> ho_y;
            for (auto r : tr) tr_y.push_back(train_y[r]);
            for (auto r : ho) ho_y.push_back(train_y[r]);
            if (single_class(ho_y) || single_class(tr_y)) {
                throw ValidationError("teacher CV fold " + std::to_string(f) + " contains a single class");
            }
            Teacher fold_teacher = Teacher::build(teacher.spec(), derive_seed(seed, static_cast<std::uint64_t>(f + 1)));
            const auto fit = fit_teacher(gather_rows(train_x, tr), tr_y, gather_rows(train_x, ho), ho_y, fold_teacher,
                                         config, derive_seed(seed, "teacher/fold" + std::to_string(f)));
            report.cv_aucs.push_back(fit.best_val_auc);
        }
        report.cv_mean = pairwise_mean(report.cv_aucs);
        std::vector<double> sq;
        for (double a : report.cv_aucs) sq.push_back((a - report.cv_mean) * (a - report.cv_mean));
        report.cv_std = report.cv_aucs.size() > 1
                            ? std::sqrt(pairwise_sum(sq) / static_cast<double>(report.cv_aucs.size() - 1))
                            : 0.0;
    }
    report.fit = fit_teacher(train_x, train_y, val_x, val_y, teacher, config, derive_seed(seed, "teacher/final"), hook);
    return report;
}

}  // namespace mint::teacher
