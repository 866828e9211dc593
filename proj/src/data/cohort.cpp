// SPDX-License-Identifier: Apache-2.0
#include "mint/data/cohort.hpp"

#include "mint/errors.hpp"

#include <charconv>
#include <fstream>
#include <unordered_set>

namespace mint::data {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

Label parse_label(std::string_view token, std::size_t line_no) {
    if (token == "CN") return Label::cn;
    if (token == "MCI") return Label::mci;
    if (token.empty()) return Label::unlabeled;
    throw ValidationError("line " + std::to_string(line_no) + ": unknown label token '" + std::string(token) + "'");
}

double parse_double(std::string_view token, std::size_t line_no, std::size_t column) {
    double v = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError("line " + std::to_string(line_no) + ", column " + std::to_string(column) +
                              ": cannot parse '" + std::string(token) + "' as a number");
    }
    return v;
}

std::size_t feature_count(Schema schema, std::size_t speech_dim, std::size_t mri_dim) {
    switch (schema) {
        case Schema::speech: return speech_dim;
        case Schema::mri: return mri_dim;
        case Schema::paired: return speech_dim + mri_dim;
    }
    return 0;
}

}  // namespace

int class_index(Label label) {
    switch (label) {
        case Label::cn: return 0;
        case Label::mci: return 1;
        case Label::unlabeled: break;
    }
    throw ValidationError("unlabeled subject has no class index");
}

Label label_from_index(int index) {
    if (index == 0) return Label::cn;
    if (index == 1) return Label::mci;
    throw ValidationError("class index must be 0 (CN) or 1 (MCI), got " + std::to_string(index));
}

std::string_view label_token(Label label) {
    switch (label) {
        case Label::cn: return "CN";
        case Label::mci: return "MCI";
        case Label::unlabeled: return "";
    }
    return "";
}

void Cohort::validate() const {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!seen.insert(r.subject_id).second) throw ValidationError("duplicate subject_id '" + r.subject_id + "'");
        if (!r.speech && !r.mri) throw ValidationError("subject '" + r.subject_id + "' has no feature vector");
        if (r.speech && r.speech->size() != speech_dim) {
            throw DimensionError("subject '" + r.subject_id + "' has " + std::to_string(r.speech->size()) +
                                 " speech features, expected " + std::to_string(speech_dim));
        }
        if (r.mri && r.mri->size() != mri_dim) {
            throw DimensionError("subject '" + r.subject_id + "' has " + std::to_string(r.mri->size()) +
                                 " MRI features, expected " + std::to_string(mri_dim));
        }
    }
}

std::unordered_map<std::string, std::size_t> Cohort::index() const {
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) idx.emplace(records[i].subject_id, i);
    return idx;
}

std::vector<std::string> Cohort::ids() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.subject_id);
    return out;
}

std::vector<std::string> Cohort::labeled_ids() const {
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (r.labeled()) out.push_back(r.subject_id);
    }
    return out;
}

Cohort load_cohort(const std::filesystem::path& path, Schema schema, std::size_t speech_dim, std::size_t mri_dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cohort file " + path.string());
    const std::size_t d = feature_count(schema, speech_dim, mri_dim);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    if (header.size() < 2 || header[0] != "subject_id" || header[1] != "label") {
        throw ValidationError(path.string() + " line 1: header must start with subject_id,label");
    }
    if (header.size() != d + 2) {
        throw DimensionError(path.string() + " line 1: header declares " + std::to_string(header.size() - 2) +
                             " features, expected " + std::to_string(d));
    }

    Cohort cohort;
    cohort.speech_dim = speech_dim;
    cohort.mri_dim = mri_dim;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != d + 2) {
            throw DimensionError(path.string() + " line " + std::to_string(line_no) + " (subject '" +
                                 std::string(fields[0]) + "'): " + std::to_string(fields.size() - 2) +
                                 " feature values, expected " + std::to_string(d));
        }
        SubjectRecord r;
        r.subject_id = std::string(fields[0]);
        if (r.subject_id.empty()) throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": empty subject_id");
        if (!seen.insert(r.subject_id).second) {
            throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": duplicate subject_id '" +
                                  r.subject_id + "'");
        }
        r.label = parse_label(fields[1], line_no);
        std::vector<double> values(d);
        for (std::size_t j = 0; j < d; ++j) values[j] = parse_double(fields[j + 2], line_no, j + 2);
        switch (schema) {
            case Schema::speech: r.speech = std::move(values); break;
            case Schema::mri: r.mri = std::move(values); break;
            case Schema::paired:
                r.speech = std::vector<double>(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(speech_dim));
                r.mri = std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(speech_dim), values.end());
                break;
        }
        cohort.records.push_back(std::move(r));
    }
    cohort.validate();
    return cohort;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw NumericError("cannot format number");
    return std::string(buf, ptr);
}

void write_cohort(const std::filesystem::path& path, const Cohort& cohort, Schema schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write cohort file " + path.string());
    const std::size_t d = feature_count(schema, cohort.speech_dim, cohort.mri_dim);
    std::string buf = "subject_id,label";
    for (std::size_t j = 0; j < d; ++j) buf += ",f" + std::to_string(j);
    buf += '\n';
    out << buf;
    for (const auto& r : cohort.records) {
        buf.clear();
        buf += r.subject_id;
        buf += ',';
        buf += label_token(r.label);
        auto emit = [&](const std::optional<std::vector<double>>& v, const char* what) {
            if (!v) throw ValidationError("subject '" + r.subject_id + "' lacks " + what + " features");
            for (double x : *v) {
                buf += ',';
                buf += format_double(x);
            }
        };
        if (schema == Schema::speech || schema == Schema::paired) emit(r.speech, "speech");
        if (schema == Schema::mri || schema == Schema::paired) emit(r.mri, "MRI");
        buf += '\n';
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Cohort join_paired(const Cohort& speech, const Cohort& mri) {
    const auto mri_index = mri.index();
    if (speech.records.size() != mri.records.size()) {
        throw ValidationError("paired join: speech and MRI files list different subject counts");
    }
    Cohort out;
    out.speech_dim = speech.speech_dim;
    out.mri_dim = mri.mri_dim;
    for (const auto& s : speech.records) {
        auto it = mri_index.find(s.subject_id);
        if (it == mri_index.end()) throw ValidationError("paired join: subject '" + s.subject_id + "' has no MRI row");
        const auto& m = mri.records[it->second];
        if (m.label != s.label) throw ValidationError("paired join: label disagreement for '" + s.subject_id + "'");
        SubjectRecord r = s;
        r.mri = m.mri;
        out.records.push_back(std::move(r));
    }
    out.validate();
    return out;
}

Cohort subset(const Cohort& cohort, std::span<const std::string> ids) {
    const auto idx = cohort.index();
    Cohort out;
    out.speech_dim = cohort.speech_dim;
    out.mri_dim = cohort.mri_dim;
    for (const auto& id : ids) {
        auto it = idx.find(id);
        if (it == idx.end()) throw ValidationError("subject '" + id + "' not present in cohort");
        out.records.push_back(cohort.records[it->second]);
    }
    return out;
}

namespace {

template <typename Get>
Matrix gather(const Cohort& cohort, std::span<const std::string> ids, std::size_t dim, const char* what, Get get) {
    const auto idx = cohort.index();
    Matrix m(static_cast<Index>(ids.size()), static_cast<Index>(dim));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = idx.find(ids[i]);
        if (it == idx.end()) throw ValidationError("subject '" + ids[i] + "' not present in cohort");
        const auto& v = get(cohort.records[it->second]);
        if (!v) throw ValidationError("subject '" + ids[i] + "' lacks " + what + " features");
        for (std::size_t j = 0; j < dim; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = (*v)[j];
    }
    return m;
}

}  // namespace

Matrix speech_matrix(const Cohort& cohort, std::span<const std::string> ids) {
    return gather(cohort, ids, cohort.speech_dim, "speech", [](const SubjectRecord& r) -> const auto& { return r.speech; });
}

Matrix mri_matrix(const Cohort& cohort, std::span<const std::string> ids) {
    return gather(cohort, ids, cohort.mri_dim, "MRI", [](const SubjectRecord& r) -> const auto& { return r.mri; });
}

std::vector<int> class_labels(const Cohort& cohort, std::span<const std::string> ids) {
    const auto idx = cohort.index();
    std::vector<int> y;
    y.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = idx.find(id);
        if (it == idx.end()) throw ValidationError("subject '" + id + "' not present in cohort");
        y.push_back(class_index(cohort.records[it->second].label));
    }
    return y;
}

Standardizer Standardizer::fit(const Matrix& x) {
    if (x.rows() == 0) throw ValidationError("cannot fit standardization on an empty matrix");
    Standardizer s;
    s.mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - s.mean;
    s.std = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
    for (Index j = 0; j < s.std.size(); ++j) {
        if (!(s.std[j] > 1e-12)) s.std[j] = 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw DimensionError("standardizer expects " + std::to_string(mean.size()) + " columns, got " +
                             std::to_string(x.cols()));
    }
    return ((x.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

}  // namespace mint::data
