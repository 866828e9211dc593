// SPDX-License-Identifier: Apache-2.0
#include "mint/data/split.hpp"
#include "mint/data/synthetic.hpp"
#include "mint/errors.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/speech/finetune.hpp"
#include "mint/speech/mae.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace mint;
using namespace mint::speech;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

data::SyntheticSpec quiet_spec() {
    auto spec = data::SyntheticSpec::small_profile();
    spec.mri_dim = 8;
    return spec;
}

struct Labeled {
    Matrix train, val;
    std::vector<int> y_train, y_val;
};

Labeled labeled_split(const data::Cohort& paired) {
    const auto ids = paired.labeled_ids();
    const auto split = data::stratified_split(ids, data::class_labels(paired, ids), {0.7, 0.3, 0.0}, 42);
    return {data::speech_matrix(paired, split.train_ids), data::speech_matrix(paired, split.val_ids),
            data::class_labels(paired, split.train_ids), data::class_labels(paired, split.val_ids)};
}

}  // namespace

TEST_CASE("mask_features count, determinism and fill") {
    const Matrix x = random_matrix(4, 209, 1);
    MaskSpec spec;
    CHECK(spec.masked_count(209) == 63);
    Rng a(5), b(5);
    const auto ma = mask_features(x, spec, a);
    const auto mb = mask_features(x, spec, b);
    CHECK(ma.masks == mb.masks);
    for (Index r = 0; r < 4; ++r) {
        const auto& set = ma.masks[static_cast<std::size_t>(r)];
        CHECK(set.size() == 63);
        CHECK(std::set<std::size_t>(set.begin(), set.end()).size() == 63);
        CHECK(set.back() < 209);
        for (auto i : set) CHECK(ma.x(r, static_cast<Index>(i)) == 0.0);
    }
    CHECK(ma.masks[0] != ma.masks[1]);
    const auto again = mask_features(x, spec, a);
    CHECK(again.masks != ma.masks);

    MaskSpec all{0.999, 0.0};
    CHECK_THROWS_AS(mask_features(x, all, a), ValidationError);
    MaskSpec none{0.001, 0.0};
    CHECK_THROWS_AS(mask_features(x, none, a), ValidationError);
}

TEST_CASE("mae_loss examples") {
    const Matrix x = random_matrix(3, 209, 2);
    MaskSpec spec;
    Rng rng(3);
    const auto masks = mask_features(x, spec, rng).masks;
    CHECK(mae_loss(x, x, masks, 0.5).loss == doctest::Approx(0.0).epsilon(1e-15));

    Matrix u = Matrix::Zero(1, 209);
    u(0, 0) = 0.6;
    u(0, 5) = 0.8;
    const MaskSets one{{0, 5, 7}};
    const double expected_mse = (4 * 0.36 + 4 * 0.64 + 0.0) / 3.0;
    CHECK(mae_loss(u, -u, one, 0.7).loss == doctest::Approx(expected_mse + 2.0 * 0.7).epsilon(1e-14));

    Matrix e0 = Matrix::Zero(1, 209);
    e0(0, 0) = 1.0;
    Matrix e1 = Matrix::Zero(1, 209);
    e1(0, 1) = 1.0;
    const MaskSets m0{{0}};
    CHECK(mae_loss(e0, e1, m0, 0.25).loss == doctest::Approx(1.0 + 0.25).epsilon(1e-15));
    CHECK(mae_loss(e0, e1, m0, 0.0).loss == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(mae_loss(Matrix::Zero(1, 209), e1, m0, 0.5), NumericError);
    // lambda_c = 0 never evaluates the cosine term, so a zero vector is fine.
    CHECK(mae_loss(Matrix::Zero(1, 209), e1, m0, 0.0).loss == 0.0);
}

TEST_CASE("mae_loss is non-negative and decreases toward x") {
    const Matrix x = random_matrix(5, 209, 4);
    const Matrix y = random_matrix(5, 209, 5);
    Rng rng(6);
    const auto masks = mask_features(x, MaskSpec{}, rng).masks;
    double prev = mae_loss(x, y, masks, 0.5).loss;
    CHECK(prev > 0.0);
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const Matrix mid = (1.0 - t) * y + t * x;
        const double l = mae_loss(x, mid, masks, 0.5).loss;
        CHECK(l >= 0.0);
        CHECK(l < prev);
        prev = l;
    }
}

TEST_CASE("pretraining on a low-noise pool halves the reconstruction loss") {
    auto spec = quiet_spec();
    spec.noise_sigma_speech = 0.1;
    spec.counts.unlabeled_speech = 1000;
    const auto c = data::generate_synthetic_cohort(spec);
    const Matrix pool = data::speech_matrix(c.unlabeled_speech, c.unlabeled_speech.ids());
    auto stack = SpeechStack::build(SpeechArch{}, 1);
    MaeConfig cfg;
    cfg.lambda_c = 0.0;
    cfg.epochs = 20;
    const auto r = pretrain_mae(pool, stack, cfg, 7);
    REQUIRE(r.history.size() == 20);
    CHECK(stack.pretrained());
    CHECK(r.val_reconstruction.back() <= 0.5 * r.initial_val_loss);
    // lambda_c = 0: the monitored loss is the reconstruction term alone.
    for (std::size_t i = 0; i < r.history.size(); ++i) CHECK(r.history[i].val_loss == r.val_reconstruction[i]);
    CHECK(r.history.front().lr == cfg.lr);
}

TEST_CASE("pretraining early stops at the best epoch on a plateau") {
    const auto c = data::generate_synthetic_cohort(quiet_spec());
    const Matrix pool = data::speech_matrix(c.unlabeled_speech, c.unlabeled_speech.ids());
    auto stack = SpeechStack::build(SpeechArch{}, 2);
    MaeConfig cfg;
    cfg.epochs = 200;
    cfg.patience = 3;
    cfg.lr = 3e-3;
    const auto r = pretrain_mae(pool, stack, cfg, 3);
    CHECK(static_cast<int>(r.history.size()) < 200);
    CHECK(r.best_epoch < static_cast<int>(r.history.size()) - 1);
    CHECK(r.best_val_loss == r.history[static_cast<std::size_t>(r.best_epoch)].val_loss);
}

TEST_CASE("pretraining hook can stop training") {
    const auto c = data::generate_synthetic_cohort(quiet_spec());
    const Matrix pool = data::speech_matrix(c.unlabeled_speech, c.unlabeled_speech.ids());
    auto stack = SpeechStack::build(SpeechArch{}, 2);
    MaeConfig cfg;
    cfg.epochs = 50;
    const auto r = pretrain_mae(pool, stack, cfg, 3, [](int epoch, double) { return epoch == 2; });
    CHECK(r.stopped_by_hook);
    CHECK(r.history.size() == 3);
}

TEST_CASE("fine-tune optimizer groups use a 10x learning-rate ratio") {
    auto stack = SpeechStack::build(SpeechArch{}, 1);
    FinetuneConfig cfg;
    const auto opt = make_finetune_optimizer(stack, cfg);
    REQUIRE(opt.groups().size() == 2);
    CHECK(opt.group("head").schedule.base_lr / opt.group("encoder").schedule.base_lr == 10.0);
    CHECK_THROWS(opt.group("decoder"));
}

TEST_CASE("fine-tune batch targets") {
    const Matrix x = random_matrix(6, 209, 9);
    const std::vector<int> y{0, 1, 0, 1, 1, 0};
    FinetuneConfig plain;
    plain.use_mixup = false;
    plain.label_smoothing = 0.0;
    Rng rng(1);
    const auto b = build_finetune_batch(x, y, {0.5, 2.0}, plain, rng);
    CHECK(b.x == x);
    for (Index i = 0; i < 6; ++i) {
        CHECK(b.targets(i, 1) == static_cast<double>(y[static_cast<std::size_t>(i)]));
        CHECK(b.targets(i, 0) + b.targets(i, 1) == 1.0);
        CHECK(b.weights[static_cast<std::size_t>(i)] == (y[static_cast<std::size_t>(i)] ? 2.0 : 0.5));
    }

    FinetuneConfig full;
    const auto m = build_finetune_batch(x, y, {0.5, 2.0}, full, rng);
    for (Index i = 0; i < 6; ++i) {
        CHECK(std::abs(m.targets.row(i).sum() - 1.0) < 1e-12);
        CHECK(m.targets(i, 0) >= 0.05 - 1e-12);
        CHECK(m.targets(i, 0) <= 0.95 + 1e-12);
    }
}

TEST_CASE("fine-tuning needs a pretrained encoder unless from_scratch") {
    auto stack = SpeechStack::build(SpeechArch{}, 1);
    const Matrix x = random_matrix(20, 209, 3);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = i % 2;
    FinetuneConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(finetune_speech(x, y, x, y, stack, cfg, 1), DependencyError);
    cfg.from_scratch = true;
    CHECK_NOTHROW(finetune_speech(x, y, x, y, stack, cfg, 1));
}

TEST_CASE("fine-tuning a separable cohort reaches validation AUC 0.9 and leaves D_s alone") {
    auto spec = quiet_spec();
    spec.class_separation = 6.0;
    spec.noise_sigma_speech = 1.0;
    const auto c = data::generate_synthetic_cohort(spec);
    const auto split = labeled_split(c.paired);
    auto stack = SpeechStack::build(SpeechArch{}, 4);
    MaeConfig mae;
    mae.epochs = 10;
    pretrain_mae(data::speech_matrix(c.unlabeled_speech, c.unlabeled_speech.ids()), stack, mae, 4);
    const std::string decoder_before = stack.decoder_checksum();
    const auto r = finetune_speech(split.train, split.y_train, split.val, split.y_val, stack, FinetuneConfig{}, 5);
    CHECK(r.best_val_auc >= 0.9);
    CHECK(stack.decoder_checksum() == decoder_before);
    CHECK(r.best_val_auc == r.history[static_cast<std::size_t>(r.best_epoch)].val_auc);
}

TEST_CASE("plain fine-tuning loss decreases monotonically at small lr") {
    auto spec = quiet_spec();
    spec.class_separation = 8.0;
    spec.noise_sigma_speech = 0.5;
    const auto c = data::generate_synthetic_cohort(spec);
    const auto split = labeled_split(c.paired);
    auto stack = SpeechStack::build(SpeechArch{}, 6);
    FinetuneConfig cfg;
    cfg.from_scratch = true;
    cfg.use_mixup = false;
    cfg.label_smoothing = 0.0;
    cfg.epochs = 10;
    cfg.patience = 50;
    cfg.head_lr = 1e-4;
    cfg.encoder_lr = 1e-5;
    const auto r = finetune_speech(split.train, split.y_train, split.train, split.y_train, stack, cfg, 7);
    REQUIRE(r.history.size() == 10);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].val_loss < r.history[i - 1].val_loss);
}

TEST_CASE("encode_speech is deterministic, batch-invariant and 128 wide") {
    auto stack = SpeechStack::build(SpeechArch{}, 3);
    const Matrix x = random_matrix(6, 209, 10);
    stack.set_standardizer(data::Standardizer::fit(x));
    Matrix dup = x;
    dup.row(1) = dup.row(0);
    const Matrix z = encode_speech(dup, stack);
    CHECK(z.cols() == 128);
    CHECK(z.row(0) == z.row(1));
    CHECK(encode_speech(dup, stack) == z);
    for (Index i = 0; i < 6; ++i) {
        const Matrix single = encode_speech(dup.row(i), stack);
        CHECK((single - z.row(i)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(encode_speech(random_matrix(2, 208, 1), stack), DimensionError);
}

TEST_CASE("speech stack freeze and checkpoint round trip") {
    auto stack = SpeechStack::build(SpeechArch{}, 8);
    const Matrix x = random_matrix(5, 209, 11);
    stack.set_standardizer(data::Standardizer::fit(x));
    stack.mark_pretrained();
    // Views taken before the freeze observe it.
    auto params = stack.encoder_params();
    stack.freeze();
    CHECK_THROWS_AS(stack.mutable_encoder(), FrozenError);
    CHECK_THROWS_AS(stack.mutable_head(), FrozenError);
    CHECK_THROWS_AS(stack.encoder_params(), FrozenError);
    std::vector<std::vector<double>> zeros;
    for (const auto& p : params) zeros.emplace_back(p.values.size(), 0.1);
    std::vector<ConstParamView> grads;
    for (std::size_t i = 0; i < params.size(); ++i) grads.push_back({params[i].name, zeros[i]});
    auto state = AdamWState::for_params(params, AdamWHyper{}, "test");
    CHECK_THROWS_AS(adamw_step(params, grads, state, 1e-3), FrozenError);

    const auto dir = std::filesystem::temp_directory_path() / "mint_test_speech";
    std::filesystem::create_directories(dir);
    io::write_checkpoint(dir, "stack", stack.manifest("finetune"), stack.tensors());
    const auto back = SpeechStack::from_checkpoint(io::read_checkpoint(dir / "stack.json"));
    CHECK(back.frozen());
    CHECK(back.checksum() == stack.checksum());
    CHECK(encode_speech(x, back) == encode_speech(x, stack));
}
