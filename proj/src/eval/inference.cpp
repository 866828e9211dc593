// SPDX-License-Identifier: Apache-2.0
#include "mint/eval/inference.hpp"

#include "mint/data/cohort.hpp"
#include "mint/data/split.hpp"
#include "mint/errors.hpp"
#include "mint/io/checkpoint.hpp"
#include "mint/speech/finetune.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

namespace mint::eval {

void PredictionSet::validate() const {
    if (scores.size() != subject_ids.size()) throw DimensionError("predictions: one score per subject required");
    if (!labels.empty() && labels.size() != subject_ids.size()) {
        throw DimensionError("predictions: label count differs from subject count");
    }
    std::set<std::string> seen;
    for (const auto& id : subject_ids) {
        if (!seen.insert(id).second) throw ValidationError("predictions: duplicate subject_id " + id);
    }
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw NumericError("predictions: score outside [0, 1]");
    }
}

std::string PredictionSet::to_csv() const {
    validate();
    std::string out = "subject_id,score,label,path\n";
    for (std::size_t i = 0; i < subject_ids.size(); ++i) {
        out += subject_ids[i];
        out += ',';
        out += data::format_double(scores[i]);
        out += ',';
        if (!labels.empty()) out += data::label_token(data::label_from_index(labels[i]));
        out += ',';
        out += path;
        out += '\n';
    }
    return out;
}

void write_predictions(const std::filesystem::path& file, const PredictionSet& predictions) {
    io::write_text(file, predictions.to_csv());
}

void verify_components(const SpeechComponents& c) {
    if (!c.encoder || !c.head || !c.teacher) throw DependencyError("inference: encoder, head and teacher are all required");
    const std::string enc = c.encoder->checksum();
    if (enc != c.refs.encoder) {
        throw ChecksumError("inference: speech encoder checksum " + enc + " does not match head reference " +
                            c.refs.encoder);
    }
    const std::string tea = c.teacher->checksum();
    if (tea != c.refs.teacher) {
        throw ChecksumError("inference: teacher checksum " + tea + " does not match head reference " + c.refs.teacher);
    }
}

namespace {

PredictionSet make_set(const std::vector<std::string>& ids, const Matrix& logits, std::string path) {
    if (static_cast<Index>(ids.size()) != logits.rows()) throw DimensionError("inference: id count differs from rows");
    PredictionSet p;
    p.subject_ids = ids;
    p.scores = speech::positive_probability(logits);
    p.path = std::move(path);
    return p;
}

Matrix aligned_logits(const Matrix& speech_raw, const SpeechComponents& c) {
    const Matrix zs = speech::encode_speech(speech_raw, *c.encoder);
    return teacher::classify_embedding(align::project_eval(zs, *c.head), *c.teacher);
}

}  // namespace

PredictionSet infer_speech_only(const std::vector<std::string>& ids, const Matrix& speech_raw,
                                const SpeechComponents& c) {
    verify_components(c);
    return make_set(ids, aligned_logits(speech_raw, c), "speech_only");
}

PredictionSet infer_mri_only(const std::vector<std::string>& ids, const Matrix& mri_raw, const teacher::Teacher& t) {
    return make_set(ids, teacher::classify_embedding(teacher::embed_mri(mri_raw, t), t), "mri_only");
}

Matrix fuse_logits(const Matrix& mri_logits, const Matrix& speech_logits) {
    if (mri_logits.rows() != speech_logits.rows() || mri_logits.cols() != speech_logits.cols()) {
        throw DimensionError("fusion: branch logits differ in shape");
    }
    return 0.5 * (mri_logits + speech_logits);
}

PredictionSet infer_fusion(const std::vector<std::string>& ids, const Matrix& speech_raw, const Matrix& mri_raw,
                           const SpeechComponents& c) {
    verify_components(c);
    if (speech_raw.rows() == 0 || mri_raw.rows() == 0) throw DependencyError("fusion needs both speech and MRI features");
    if (speech_raw.rows() != mri_raw.rows()) throw DimensionError("fusion: speech and MRI row counts differ");
    const Matrix ml = teacher::classify_embedding(teacher::embed_mri(mri_raw, *c.teacher), *c.teacher);
    return make_set(ids, fuse_logits(ml, aligned_logits(speech_raw, c)), "fusion");
}

PredictionSet infer_speech_head(const std::vector<std::string>& ids, const Matrix& speech_raw,
                                const speech::SpeechStack& stack) {
    return make_set(ids, speech::speech_head_logits(speech_raw, stack), "speech_head");
}

PcaResult pca_2d(const Matrix& x) {
    if (x.rows() < 3) throw ValidationError("pca_2d needs at least 3 rows");
    if (x.cols() < 2) throw ValidationError("pca_2d needs at least 2 columns");
    const RowVector mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_2d: eigendecomposition failed");
    const Index d = x.cols();
    PcaResult out;
    out.components.resize(d, 2);
    for (int k = 0; k < 2; ++k) {
        const Index col = d - 1 - k;  // eigenvalues ascend
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Index arg = 0;
        for (Index i = 1; i < d; ++i) {
            if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
        }
        if (v(arg) < 0.0) v = -v;
        out.components.col(k) = v;
        out.explained[k] = std::max(0.0, solver.eigenvalues()(col));
    }
    out.coords = centered * out.components;
    return out;
}

std::vector<double> LrModel::predict(const Matrix& raw) const {
    const Matrix x = standardizer.apply(raw);
    std::vector<double> p(static_cast<std::size_t>(x.rows()));
    for (Index r = 0; r < x.rows(); ++r) {
        const double t = x.row(r).dot(weights) + bias;
        p[static_cast<std::size_t>(r)] = 1.0 / (1.0 + std::exp(-t));
    }
    return p;
}

LrModel train_lr_baseline(const Matrix& train_raw, std::span<const int> train_labels, const LrConfig& config) {
    if (train_raw.rows() != static_cast<Index>(train_labels.size())) {
        throw DimensionError("lr baseline: label count mismatch");
    }
    const auto cw = data::class_weights(train_labels);  // rejects a single-class train set
    LrModel m;
    m.standardizer = data::Standardizer::fit(train_raw);
    const Matrix x = m.standardizer.apply(train_raw);
    const Index n = x.rows();
    Eigen::VectorXd w_sample(n);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        y(i) = train_labels[static_cast<std::size_t>(i)];
        w_sample(i) = cw[static_cast<std::size_t>(train_labels[static_cast<std::size_t>(i)])];
    }
    const double wsum = w_sample.sum();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
    double b = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
        const Eigen::VectorXd t = (x * w).array() + b;
        const Eigen::VectorXd p = (1.0 / (1.0 + (-t.array()).exp())).matrix();
        const Eigen::VectorXd r = (w_sample.array() * (p - y).array()).matrix() / wsum;
        w -= config.lr * (x.transpose() * r + config.l2 * w);
        b -= config.lr * r.sum();
    }
    m.weights = w.transpose();
    m.bias = b;
    return m;
}

}  // namespace mint::eval
