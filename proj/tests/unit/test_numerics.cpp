// SPDX-License-Identifier: Apache-2.0
#include "mint/errors.hpp"
#include "mint/numerics/gradcheck.hpp"
#include "mint/numerics/layers.hpp"
#include "mint/numerics/mlp.hpp"
#include "mint/numerics/optim.hpp"
#include "mint/numerics/training.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

using namespace mint;

namespace {

Matrix random_matrix(Index r, Index c, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

// Naive triple loop, independent of Eigen's product kernels.
Matrix naive_affine(const Matrix& x, const Matrix& w, const RowVector& b) {
    Matrix out(x.rows(), w.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < w.cols(); ++j) {
            double s = b(j);
            for (Index k = 0; k < x.cols(); ++k) s += x(i, k) * w(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("dense_forward examples") {
    DenseLayer id = DenseLayer::zeros(2, 2);
    id.weights = Matrix::Identity(2, 2);
    Matrix x(1, 2);
    x << 1, 0;
    const Matrix y = dense_forward(x, id);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 0.0);

    DenseLayer sum = DenseLayer::zeros(2, 1);
    sum.weights << 1, 1;
    sum.bias << -2;
    Matrix ones(1, 2);
    ones << 1, 1;
    CHECK(dense_forward(ones, sum)(0, 0) == 0.0);

    Rng rng(3);
    const auto layer = DenseLayer::fan_in_uniform(5, 4, rng);
    const Matrix in = random_matrix(3, 5, rng);
    const Matrix got = dense_forward(in, layer);
    const Matrix want = naive_affine(in, layer.weights, layer.bias);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(dense_forward(random_matrix(3, 4, rng), layer), DimensionError);
}

TEST_CASE("gelu uses the exact normal CDF") {
    Matrix x(1, 4);
    x << 0.0, 10.0, 1.0, -1.0;
    const Matrix y = gelu(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(std::abs(y(0, 1) - 10.0) < 1e-6);
    const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::numbers::sqrt2));
    CHECK(std::abs(y(0, 2) - phi1) < 1e-15);
    CHECK(y(0, 2) == doctest::Approx(0.841345).epsilon(1e-6));
    // The tanh approximation differs from the exact form at x=1 by ~1.6e-4.
    const double tanh_form = 0.5 * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (1.0 + 0.044715)));
    CHECK(std::abs(y(0, 2) - tanh_form) > 1e-5);
    CHECK(y(0, 3) == doctest::Approx(-(1.0 - phi1)));
}

TEST_CASE("dropout modes and rate") {
    Rng rng(11);
    const Matrix x = random_matrix(4, 6, rng);
    CHECK(dropout(x, 0.6, Mode::eval, rng).output == x);
    CHECK(dropout(x, 0.0, Mode::train, rng).output == x);
    CHECK_THROWS_AS(dropout(x, 1.0, Mode::train, rng), ValidationError);

    const Matrix big = Matrix::Ones(100, 1000);
    const auto r = dropout(big, 0.6, Mode::train, rng);
    const double zeros = static_cast<double>((r.output.array() == 0.0).count()) / 1e5;
    CHECK(std::abs(zeros - 0.6) < 0.01);
    const double survivor = r.output.maxCoeff();
    CHECK(survivor == doctest::Approx(1.0 / 0.4));
}

TEST_CASE("batchnorm train statistics, degenerate gamma and eval arithmetic") {
    Rng rng(5);
    Matrix x = random_matrix(64, 3, rng) * 3.0;
    x.array() += 2.0;
    auto state = BatchNormState::identity(3);
    const Matrix y = batchnorm(x, state, Mode::train);
    for (Index j = 0; j < 3; ++j) {
        const double mean = y.col(j).mean();
        const double var = (y.col(j).array() - mean).square().mean();
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-5);
    }

    auto flat = BatchNormState::identity(3);
    flat.gamma.setZero();
    flat.beta << 0.5, -1.0, 2.0;
    const Matrix z = batchnorm(x, flat, Mode::train);
    for (Index i = 0; i < z.rows(); ++i) CHECK(z.row(i) == flat.beta);

    BatchNormState ev = BatchNormState::identity(2);
    ev.running_mean << 1.0, -2.0;
    ev.running_var << 4.0, 0.25;
    ev.gamma << 2.0, 0.5;
    ev.beta << 0.1, 0.2;
    Matrix xin(1, 2);
    xin << 3.0, -1.0;
    const Matrix out = batchnorm(xin, ev, Mode::eval);
    CHECK(out(0, 0) == doctest::Approx((3.0 - 1.0) / std::sqrt(4.0 + 1e-5) * 2.0 + 0.1).epsilon(1e-14));
    CHECK(out(0, 1) == doctest::Approx((-1.0 + 2.0) / std::sqrt(0.25 + 1e-5) * 0.5 + 0.2).epsilon(1e-14));

    CHECK_THROWS_AS(batchnorm(random_matrix(1, 3, rng), state, Mode::train), ValidationError);
}

TEST_CASE("batchnorm momentum update of running statistics") {
    Matrix x(2, 1);
    x << 1.0, 3.0;
    auto s = BatchNormState::identity(1);
    batchnorm(x, s, Mode::train);
    // mean 2, unbiased variance 2
    CHECK(s.running_mean(0) == doctest::Approx(0.9 * 0.0 + 0.1 * 2.0));
    CHECK(s.running_var(0) == doctest::Approx(0.9 * 1.0 + 0.1 * 2.0));
}

TEST_CASE("softmax examples") {
    Matrix l(3, 2);
    l << 0, 0, 1000, 0, 1, 2;
    const Matrix p = softmax(l);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(std::isfinite(p(1, 0)));
    CHECK(p(1, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) < 1e-300);
    CHECK(p(2, 0) == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(p(2, 1) == doctest::Approx(0.73106).epsilon(1e-5));

    Rng rng(2);
    const Matrix big = random_matrix(50, 2, rng) * 1e4;
    const Matrix q = softmax(big);
    for (Index i = 0; i < q.rows(); ++i) CHECK(std::abs(q.row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("soft cross-entropy examples") {
    Matrix logits(1, 2);
    logits << 0, 0;
    Matrix t(1, 2);
    t << 0.5, 0.5;
    const std::vector<double> w{1.0};
    CHECK(soft_cross_entropy(logits, t, w).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Matrix hot(1, 2);
    hot << 1, 0;
    double prev = 1e9;
    for (double margin : {1.0, 5.0, 10.0, 30.0}) {
        Matrix lm(1, 2);
        lm << margin, 0;
        const double loss = soft_cross_entropy(lm, hot, w).loss;
        CHECK(loss < prev);
        prev = loss;
    }
    CHECK(prev < 1e-12);

    Matrix l2(1, 2);
    l2 << 2, 0;
    Matrix mixed(1, 2);
    mixed << 0.95, 0.05;
    const double ce0 = std::log1p(std::exp(-2.0));
    const double ce1 = 2.0 + ce0;
    CHECK(soft_cross_entropy(l2, mixed, w).loss == doctest::Approx(0.95 * ce0 + 0.05 * ce1).epsilon(1e-12));
    CHECK(soft_cross_entropy(l2, mixed, w).loss == doctest::Approx(0.22693).epsilon(1e-5));

    Matrix off(1, 2);
    off << 0.7, 0.7;
    CHECK_THROWS_AS(soft_cross_entropy(l2, off, w), ValidationError);
}

TEST_CASE("soft cross-entropy is a weighted mean") {
    Matrix logits(2, 2);
    logits << 1, 0, 0, 3;
    Matrix t(2, 2);
    t << 1, 0, 1, 0;
    const std::vector<double> w{1.0, 3.0};
    const double a = std::log1p(std::exp(-1.0));
    const double b = 3.0 + std::log1p(std::exp(-3.0));
    CHECK(soft_cross_entropy(logits, t, w).loss == doctest::Approx((a + 3.0 * b) / 4.0).epsilon(1e-12));
}

TEST_CASE("adamw decay-only step and bit-identity") {
    std::vector<double> p{2.0, -3.0};
    std::vector<double> g{0.0, 0.0};
    std::vector<ParamView> params{{"p", p, nullptr}};
    std::vector<ConstParamView> grads{{"p", g}};
    auto state = AdamWState::for_params(params, AdamWHyper{}, "test");
    adamw_step(params, grads, state, 1e-3);
    CHECK(p[0] == doctest::Approx(2.0 * (1.0 - 1e-5)).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(-3.0 * (1.0 - 1e-5)).epsilon(1e-15));

    std::vector<double> q{0.123456789, 7.0};
    std::vector<ParamView> qv{{"q", q, nullptr}};
    AdamWHyper nodecay;
    nodecay.weight_decay = 0.0;
    auto s2 = AdamWState::for_params(qv, nodecay, "test");
    const auto before = q;
    for (int i = 0; i < 5; ++i) adamw_step(qv, grads, s2, 1e-2);
    CHECK(q == before);
}

TEST_CASE("adamw constant gradient step tends to lr") {
    std::vector<double> p{0.0};
    std::vector<double> g{0.37};
    std::vector<ParamView> params{{"p", p, nullptr}};
    std::vector<ConstParamView> grads{{"p", g}};
    AdamWHyper h;
    h.weight_decay = 0.0;
    auto state = AdamWState::for_params(params, h, "test");
    double last = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double prev = p[0];
        adamw_step(params, grads, state, 1e-3);
        last = prev - p[0];
    }
    CHECK(last == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adamw matches a hand-unrolled recurrence on a quadratic") {
    // f(p) = 0.5 * 3 * (p - 1)^2
    const double lr = 0.05;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
    double p_ref = 4.0, m = 0.0, v = 0.0;
    std::vector<double> p{4.0};
    std::vector<double> g{0.0};
    std::vector<ParamView> params{{"p", p, nullptr}};
    std::vector<ConstParamView> grads{{"p", g}};
    auto state = AdamWState::for_params(params, AdamWHyper{}, "test");
    for (int t = 1; t <= 3; ++t) {
        const double grad = 3.0 * (p_ref - 1.0);
        m = b1 * m + (1 - b1) * grad;
        v = b2 * v + (1 - b2) * grad * grad;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        p_ref = p_ref - lr * wd * p_ref - lr * mh / (std::sqrt(vh) + eps);

        g[0] = 3.0 * (p[0] - 1.0);
        adamw_step(params, grads, state, lr);
        CHECK(std::abs(p[0] - p_ref) < 1e-10);
    }
}

TEST_CASE("adamw rejects NaN gradients and frozen parameters") {
    std::vector<double> p{1.0};
    std::vector<double> g{std::nan("")};
    std::vector<ParamView> params{{"teacher.w", p, nullptr}};
    std::vector<ConstParamView> grads{{"teacher.w", g}};
    auto state = AdamWState::for_params(params, AdamWHyper{}, "stage2");
    try {
        adamw_step(params, grads, state, 1e-3);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("stage2") != std::string::npos);
        CHECK(msg.find("teacher.w") != std::string::npos);
    }
    CHECK(p[0] == 1.0);

    FreezeFlag flag;
    flag.set();
    std::vector<double> g2{0.5};
    std::vector<ParamView> fp{{"w", p, flag.observe()}};
    std::vector<ConstParamView> fg{{"w", g2}};
    auto s2 = AdamWState::for_params(fp, AdamWHyper{}, "stage3");
    CHECK_THROWS_AS(adamw_step(fp, fg, s2, 1e-3), FrozenError);
}

TEST_CASE("cosine restart schedule") {
    CosineRestartSchedule s{0.01, 50};
    CHECK(cosine_restart_lr(s, 0) == 0.01);
    CHECK(cosine_restart_lr(s, 25) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(cosine_restart_lr(s, 50) == 0.01);
    CHECK(cosine_restart_lr(s, 150) == 0.01);
    for (int e = 0; e < 200; ++e) {
        const double lr = cosine_restart_lr(s, e);
        CHECK(lr > 0.0);
        CHECK(lr <= 0.01);
        CHECK(lr == cosine_restart_lr(s, e + 50));
    }
}

TEST_CASE("grouped optimizer keeps per-group base rates") {
    std::vector<double> a{1.0}, b{1.0};
    GroupedAdamW opt(AdamWHyper{}, 50, "ft");
    opt.add_group("head", {{"a", a, nullptr}}, 1e-4);
    opt.add_group("encoder", {{"b", b, nullptr}}, 1e-5);
    CHECK(opt.group("head").schedule.base_lr / opt.group("encoder").schedule.base_lr == 10.0);
    CHECK_THROWS_AS(opt.group("decoder"), ValidationError);
}

TEST_CASE("gradcheck on a linear layer with soft cross-entropy") {
    Rng rng(21);
    DenseLayer layer = DenseLayer::fan_in_uniform(4, 2, rng);
    const Matrix x = random_matrix(6, 4, rng);
    Matrix t(6, 2);
    for (Index i = 0; i < 6; ++i) t.row(i) << (i % 2 ? 0.9 : 0.2), (i % 2 ? 0.1 : 0.8);
    const std::vector<double> w(6, 1.0);
    GradcheckProblem prob;
    prob.params = {{"w", {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())}, nullptr},
                   {"b", {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())}, nullptr}};
    prob.loss = [&] { return soft_cross_entropy(dense_forward(x, layer), t, w).loss; };
    prob.gradient = [&] {
        const auto lg = soft_cross_entropy(dense_forward(x, layer), t, w);
        DenseLayer g = DenseLayer::zeros(4, 2);
        dense_backward(x, layer, lg.grad, g, false);
        return std::vector<std::vector<double>>{{g.weights.data(), g.weights.data() + g.weights.size()},
                                                {g.bias.data(), g.bias.data() + g.bias.size()}};
    };
    const auto r = gradcheck(prob, 50, 1e-4, 1);
    CHECK(r.probes == 50);
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradcheck rejects empty probe sets and nondeterminism") {
    GradcheckProblem empty;
    empty.loss = [] { return 0.0; };
    empty.gradient = [] { return std::vector<std::vector<double>>{}; };
    CHECK_THROWS_AS(gradcheck(empty, 10, 1e-4, 1), ValidationError);

    std::vector<double> p{1.0};
    int calls = 0;
    GradcheckProblem noisy;
    noisy.params = {{"p", p, nullptr}};
    noisy.loss = [&] { return p[0] + 1e-3 * (++calls); };
    noisy.gradient = [] { return std::vector<std::vector<double>>{{1.0}}; };
    CHECK_THROWS_AS(gradcheck(noisy, 10, 1e-4, 1), ValidationError);
}

TEST_CASE("mlp backward matches finite differences with GELU") {
    Rng rng(8);
    Mlp net = Mlp::init({5, 7, 3}, false, 0.0, rng);
    const Matrix x = random_matrix(4, 5, rng);
    const Matrix target = random_matrix(4, 3, rng);
    auto loss = [&] {
        const Matrix y = net.forward_eval(x);
        return 0.5 * (y - target).squaredNorm();
    };
    std::vector<ParamView> params;
    net.append_params(params, "net");
    GradcheckProblem prob;
    prob.params = params;
    prob.loss = loss;
    prob.gradient = [&] {
        Mlp::Cache cache;
        const Matrix y = net.forward(x, Mode::eval, nullptr, &cache);
        Mlp g = net.zeros_like();
        net.backward(cache, y - target, g, false);
        std::vector<ConstParamView> gv;
        g.append_params(gv, "net");
        std::vector<std::vector<double>> out;
        for (const auto& v : gv) out.emplace_back(v.values.begin(), v.values.end());
        return out;
    };
    CHECK(gradcheck(prob, 60, 1e-5, 2).max_rel_error < 1e-6);
}

TEST_CASE("make_batches covers every row once and avoids singleton batches") {
    Rng rng(4);
    const auto batches = make_batches(65, 32, rng);
    std::multiset<std::size_t> seen;
    for (const auto& b : batches) {
        CHECK(b.size() >= 2);
        seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == 65);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 65);
}

TEST_CASE("early stopping tie-break and patience") {
    EarlyStopping es(2, true);
    CHECK(es.update(0, 0.8, 1.0));
    CHECK(es.update(1, 0.8, 0.9));
    CHECK_FALSE(es.update(2, 0.8, 0.95));
    CHECK_FALSE(es.should_stop());
    CHECK_FALSE(es.update(3, 0.7, 0.1));
    CHECK(es.should_stop());
    CHECK(es.best_epoch() == 1);
}

TEST_CASE("pairwise summation is order-deterministic") {
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back(1.0 / (i + 1));
    const double a = pairwise_sum(v);
    CHECK(a == pairwise_sum(v));
    CHECK(a == doctest::Approx(7.485470860550345).epsilon(1e-13));
}
