// SPDX-License-Identifier: Apache-2.0
#include "mint/data/augment.hpp"
#include "mint/data/cohort.hpp"
#include "mint/data/split.hpp"
#include "mint/data/synthetic.hpp"
#include "mint/errors.hpp"
#include "mint/io/checkpoint.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace mint;
using namespace mint::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mint_test_data";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("S" + std::to_string(1000 + i));
    return ids;
}

std::vector<int> make_labels(std::size_t cn, std::size_t mci) {
    std::vector<int> y(cn, 0);
    y.insert(y.end(), mci, 1);
    return y;
}

std::size_t count_class(const std::vector<std::string>& part, const std::vector<std::string>& ids,
                        const std::vector<int>& labels, int cls) {
    std::size_t n = 0;
    for (const auto& id : part) {
        const auto i = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
        if (labels.at(i) == cls) ++n;
    }
    return n;
}

std::vector<double> column(const Matrix& m, Index c) {
    std::vector<double> v;
    for (Index i = 0; i < m.rows(); ++i) v.push_back(m(i, c));
    return v;
}

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                den += 1.0;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return num / den;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd x = a.array() - a.mean();
    const Eigen::VectorXd y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

}  // namespace

TEST_CASE("load_cohort accepts a well-formed paired file") {
    const auto p = scratch("paired3.csv");
    write_file(p,
               "subject_id,label,f0,f1,f2,f3,f4\n"
               "A,CN,1,2,3,0.5,0.25\n"
               "B,MCI,-1,0,1e-3,2,3\n"
               "C,CN,0,0,1,1,1\n");
    const auto c = load_cohort(p, Schema::paired, 3, 2);
    REQUIRE(c.records.size() == 3);
    CHECK(c.records[1].label == Label::mci);
    CHECK((*c.records[1].speech)[2] == 1e-3);
    CHECK((*c.records[0].mri)[1] == 0.25);
}

TEST_CASE("load_cohort rejects short rows, duplicates and unknown labels") {
    const auto short_row = scratch("short.csv");
    write_file(short_row, "subject_id,label,f0,f1,f2\nA,CN,1,2,3\nB,MCI,1,2\n");
    try {
        load_cohort(short_row, Schema::speech, 3, 0);
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("B") != std::string::npos);
    }

    const auto dup = scratch("dup.csv");
    write_file(dup, "subject_id,label,f0,f1,f2\nA,CN,1,2,3\nA,MCI,1,2,3\n");
    CHECK_THROWS_AS(load_cohort(dup, Schema::speech, 3, 0), ValidationError);

    const auto bad = scratch("bad_label.csv");
    write_file(bad, "subject_id,label,f0,f1,f2\nA,AD,1,2,3\n");
    CHECK_THROWS_AS(load_cohort(bad, Schema::speech, 3, 0), ValidationError);
}

TEST_CASE("208-wide speech row is rejected at default dimension") {
    const auto p = scratch("narrow.csv");
    std::string text = "subject_id,label";
    for (int i = 0; i < 209; ++i) text += ",f" + std::to_string(i);
    text += "\nA,CN";
    for (int i = 0; i < 208; ++i) text += ",0.5";
    text += "\n";
    write_file(p, text);
    CHECK_THROWS_AS(load_cohort(p, Schema::speech), DimensionError);
}

TEST_CASE("cohort CSV round trip preserves values exactly") {
    Cohort c;
    c.speech_dim = 2;
    c.mri_dim = 0;
    c.records.push_back({"X1", Label::unlabeled, std::vector<double>{0.1, 1.0 / 3.0}, std::nullopt});
    c.records.push_back({"X2", Label::mci, std::vector<double>{-2.5e-300, 12345.678901234567}, std::nullopt});
    const auto p = scratch("roundtrip.csv");
    write_cohort(p, c, Schema::speech);
    const auto back = load_cohort(p, Schema::speech, 2, 0);
    CHECK(back.records[0].label == Label::unlabeled);
    CHECK(*back.records[0].speech == *c.records[0].speech);
    CHECK(*back.records[1].speech == *c.records[1].speech);
}

TEST_CASE("stratified split reproduces the 266-subject protocol") {
    const auto ids = make_ids(266);
    const auto labels = make_labels(187, 79);
    const auto s = stratified_split(ids, labels, {0.70, 0.15, 0.15}, 42);
    CHECK(s.test_ids.size() == 40);
    CHECK(count_class(s.test_ids, ids, labels, 0) == 28);
    CHECK(count_class(s.test_ids, ids, labels, 1) == 12);
    CHECK(s.val_ids.size() == 40);
    CHECK(s.train_ids.size() == 186);
    CHECK(count_class(s.train_ids, ids, labels, 1) == 55);

    std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
    all.insert(s.val_ids.begin(), s.val_ids.end());
    all.insert(s.test_ids.begin(), s.test_ids.end());
    CHECK(all.size() == 266);

    const auto again = stratified_split(ids, labels, {0.70, 0.15, 0.15}, 42);
    CHECK(again.test_ids == s.test_ids);
    CHECK(again.val_ids == s.val_ids);
    CHECK(again.train_ids == s.train_ids);
}

TEST_CASE("stratified split of 10 balanced subjects") {
    const auto ids = make_ids(10);
    const auto labels = make_labels(5, 5);
    const auto s = stratified_split(ids, labels);
    CHECK(s.test_ids.size() == 2);
    CHECK(count_class(s.test_ids, ids, labels, 1) == 1);
    CHECK(s.val_ids.size() == 2);
    CHECK(count_class(s.val_ids, ids, labels, 1) == 1);
    CHECK(s.train_ids.size() == 6);
    CHECK(count_class(s.train_ids, ids, labels, 1) == 3);

    CHECK_THROWS_AS(stratified_split(make_ids(7), make_labels(5, 2)), ValidationError);
}

TEST_CASE("split JSON round trip") {
    const auto ids = make_ids(20);
    const auto labels = make_labels(12, 8);
    const auto s = stratified_split(ids, labels, {0.7, 0.15, 0.15}, 9);
    const auto back = SplitAssignment::from_json(s.to_json());
    CHECK(std::set<std::string>(back.test_ids.begin(), back.test_ids.end()) ==
          std::set<std::string>(s.test_ids.begin(), s.test_ids.end()));
    CHECK(back.seed == 9);
}

TEST_CASE("stratified k-fold examples") {
    const auto ids10 = make_ids(10);
    const auto y10 = make_labels(5, 5);
    const auto f = stratified_kfold(ids10, y10, 5, 3);
    for (int k = 0; k < 5; ++k) {
        const auto fold = f.fold_ids(k);
        CHECK(fold.size() == 2);
        CHECK(count_class(fold, ids10, y10, 0) == 1);
    }

    const auto ids = make_ids(186);
    const auto y = make_labels(131, 55);
    const auto g = stratified_kfold(ids, y, 5, 42);
    std::multiset<std::size_t> sizes;
    for (int k = 0; k < 5; ++k) {
        const auto fold = g.fold_ids(k);
        sizes.insert(fold.size());
        const double mci = static_cast<double>(count_class(fold, ids, y, 1));
        CHECK(std::abs(mci - 55.0 * static_cast<double>(fold.size()) / 186.0) <= 1.0);
        CHECK(g.train_ids(k).size() + fold.size() == 186);
    }
    CHECK(sizes == std::multiset<std::size_t>{37, 37, 37, 37, 38});
    CHECK(g.digest() == stratified_kfold(ids, y, 5, 42).digest());
    CHECK(g.digest() != stratified_kfold(ids, y, 5, 43).digest());

    CHECK_THROWS_AS(stratified_kfold(make_ids(9), make_labels(5, 4), 5, 1), ValidationError);
}

TEST_CASE("class weights") {
    const auto w = class_weights(make_labels(187, 79));
    CHECK(w[0] == doctest::Approx(0.71123).epsilon(1e-5));
    CHECK(w[1] == doctest::Approx(1.68354).epsilon(1e-5));
    CHECK(std::abs(187 * w[0] + 79 * w[1] - 266.0) < 1e-9);

    const auto b = class_weights(make_labels(50, 50));
    CHECK(b[0] == 1.0);
    CHECK(b[1] == 1.0);

    const auto u = class_weights(make_labels(3, 1));
    CHECK(u[0] == doctest::Approx(4.0 / 6.0));
    CHECK(u[1] == doctest::Approx(2.0));

    CHECK_THROWS_AS(class_weights(make_labels(4, 0)), ValidationError);
}

TEST_CASE("mixup endpoints, midpoint and lambda distribution") {
    Matrix x(2, 3);
    x << 1, 2, 3, -1, 0, 5;
    Matrix y(2, 2);
    y << 1, 0, 0, 1;
    const std::vector<std::size_t> swap{1, 0};
    const auto same = mixup_with(x, y, 1.0, swap);
    CHECK(same.x == x);
    CHECK(same.y == y);

    const auto mid = mixup_with(x, y, 0.5, swap);
    CHECK(mid.y(0, 0) == 0.5);
    CHECK(mid.y(0, 1) == 0.5);

    Rng rng(17);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += mixup_batch(x, y, 0.3, rng).lambda;
    CHECK(std::abs(sum / 10000.0 - 0.5) < 0.02);

    const auto r = mixup_batch(x, y, 0.3, rng);
    for (Index i = 0; i < 2; ++i) {
        CHECK(std::abs(r.y.row(i).sum() - 1.0) < 1e-9);
        for (Index j = 0; j < 3; ++j) {
            const double a = x(i, j);
            const double b = x(static_cast<Index>(r.permutation[static_cast<std::size_t>(i)]), j);
            CHECK(r.x(i, j) >= std::min(a, b) - 1e-12);
            CHECK(r.x(i, j) <= std::max(a, b) + 1e-12);
        }
    }
    CHECK_THROWS_AS(mixup_batch(x, y, 0.0, rng), ValidationError);
}

TEST_CASE("label smoothing") {
    Matrix y(2, 2);
    y << 1, 0, 0, 1;
    const Matrix s = smooth_labels(y, 0.10);
    CHECK(s(0, 0) == doctest::Approx(0.95));
    CHECK(s(0, 1) == doctest::Approx(0.05));
    CHECK(s(1, 0) == doctest::Approx(0.05));
    CHECK(s(1, 1) == doctest::Approx(0.95));
    CHECK(smooth_labels(y, 0.0) == y);
    CHECK_THROWS_AS(smooth_labels(y, 1.0), ValidationError);
}

TEST_CASE("synthetic cohort counts and determinism") {
    auto spec = SyntheticSpec::small_profile();
    spec.mri_dim = 64;
    const auto a = generate_synthetic_cohort(spec);
    CHECK(a.unlabeled_speech.records.size() == 1000);
    CHECK(a.mri_only.records.size() == 400);
    CHECK(a.paired.records.size() == 120);
    std::size_t mci = 0;
    for (const auto& r : a.paired.records) mci += r.label == Label::mci;
    CHECK(mci == 36);

    const auto b = generate_synthetic_cohort(spec);
    const auto pa = scratch("syn_a.csv");
    const auto pb = scratch("syn_b.csv");
    write_cohort(pa, a.paired, Schema::speech);
    write_cohort(pb, b.paired, Schema::speech);
    CHECK(io::file_sha256(pa) == io::file_sha256(pb));
}

TEST_CASE("synthetic class signal scales with separation") {
    auto spec = SyntheticSpec::small_profile();
    spec.mri_dim = 64;
    spec.class_separation = 8.0;
    const auto strong = generate_synthetic_cohort(spec);
    const auto ids = strong.paired.ids();
    const auto y = class_labels(strong.paired, ids);
    const auto u0 = column(strong.paired_latents, 0);
    CHECK(brute_auc(u0, y) >= 0.99);

    spec.class_separation = 0.0;
    const auto null = generate_synthetic_cohort(spec);
    const auto yn = class_labels(null.paired, null.paired.ids());
    const auto n0 = column(null.paired_latents, 0);
    CHECK(std::abs(brute_auc(n0, yn) - 0.5) < 0.1);
}

TEST_CASE("latents recovered from both modalities agree") {
    auto spec = SyntheticSpec::small_profile();
    spec.class_separation = 4.0;
    spec.noise_sigma_speech = 0.5;
    spec.noise_sigma_mri = 0.5;
    spec.mri_dim = 512;
    const auto c = generate_synthetic_cohort(spec);
    const auto ids = c.paired.ids();
    const Matrix xs = speech_matrix(c.paired, ids);
    const Matrix xm = mri_matrix(c.paired, ids);
    // u A = x  ->  u = x A^T (A A^T)^-1
    const Matrix us = (c.speech_map * c.speech_map.transpose()).ldlt().solve(c.speech_map * xs.transpose()).transpose();
    const Matrix um = (c.mri_map * c.mri_map.transpose()).ldlt().solve(c.mri_map * xm.transpose()).transpose();
    for (Index k = 0; k < us.cols(); ++k) CHECK(correlation(us.col(k), um.col(k)) > 0.9);
}

TEST_CASE("standardizer keeps zero-variance columns at unit scale") {
    Matrix x(3, 2);
    x << 1, 5, 2, 5, 3, 5;
    const auto s = Standardizer::fit(x);
    CHECK(s.std(1) == 1.0);
    const Matrix z = s.apply(x);
    CHECK(z(0, 1) == 0.0);
    CHECK(std::abs(z.col(0).mean()) < 1e-15);
}
