// SPDX-License-Identifier: Apache-2.0
#include "mint/eval/gradient_suite.hpp"

#include "mint/align/projection_head.hpp"
#include "mint/speech/mae.hpp"
#include "mint/speech/speech_stack.hpp"
#include "mint/teacher/teacher.hpp"

#include <chrono>
#include <memory>

namespace mint::eval {
namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

Matrix random_targets(Index rows, Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Matrix t(rows, 2);
    for (Index r = 0; r < rows; ++r) {
        t(r, 0) = u(rng);
        t(r, 1) = 1.0 - t(r, 0);
    }
    return t;
}

std::vector<std::vector<double>> flatten(const std::vector<ConstParamView>& views) {
    std::vector<std::vector<double>> out;
    for (const auto& v : views) out.emplace_back(v.values.begin(), v.values.end());
    return out;
}

struct EncoderHeadCase {
    Mlp encoder;
    DenseLayer head;
    Matrix x;
    Matrix targets;
    std::vector<double> weights;

    double loss() const {
        return soft_cross_entropy(dense_forward(encoder.forward_eval(x), head), targets, weights).loss;
    }
    std::vector<std::vector<double>> gradient() const {
        Mlp::Cache cache;
        const Matrix z = encoder.forward(x, Mode::eval, nullptr, &cache);
        const LossGrad lg = soft_cross_entropy(dense_forward(z, head), targets, weights);
        DenseLayer hg = DenseLayer::zeros(head.in_dim(), head.out_dim());
        const Matrix dz = dense_backward(z, head, lg.grad, hg, true);
        Mlp eg = encoder.zeros_like();
        encoder.backward(cache, dz, eg, false);
        std::vector<ConstParamView> g;
        eg.append_params(g, "encoder");
        hg.append_params(g, "head");
        return flatten(g);
    }
};

struct MaeCase {
    Mlp encoder;
    Mlp decoder;
    Matrix x;
    speech::MaskedBatch masked;
    double lambda_c = 0.5;

    double loss() const {
        return speech::mae_loss(x, decoder.forward_eval(encoder.forward_eval(masked.x)), masked.masks, lambda_c).loss;
    }
    std::vector<std::vector<double>> gradient() const {
        Mlp::Cache ec;
        Mlp::Cache dc;
        const Matrix z = encoder.forward(masked.x, Mode::eval, nullptr, &ec);
        const Matrix xh = decoder.forward(z, Mode::eval, nullptr, &dc);
        const LossGrad lg = speech::mae_loss(x, xh, masked.masks, lambda_c);
        Mlp eg = encoder.zeros_like();
        Mlp dg = decoder.zeros_like();
        const Matrix dz = decoder.backward(dc, lg.grad, dg, true);
        encoder.backward(ec, dz, eg, false);
        std::vector<ConstParamView> g;
        eg.append_params(g, "encoder");
        dg.append_params(g, "decoder");
        return flatten(g);
    }
};

struct HeadCase {
    align::ProjectionHead head;
    Matrix z;
    Matrix target;
    align::AlignWeights weights{1.0, 0.5};
    // Batch statistics, no dropout, running estimates untouched.
    static constexpr align::ProjectMode mode{Mode::train, Mode::eval, false};

    double loss() {
        return align::align_loss(align::project(z, head, mode, nullptr, nullptr), target, weights).loss;
    }
    std::vector<std::vector<double>> gradient() {
        align::ProjectCache cache;
        const Matrix out = align::project(z, head, mode, nullptr, &cache);
        const LossGrad lg = align::align_loss(out, target, weights);
        align::ProjectionHead g = head.zeros_like();
        const Matrix dz = align::project_backward(cache, head, lg.grad, g);
        std::vector<ConstParamView> views;
        g.append_params(views);
        auto flat = flatten(views);
        flat.emplace_back(dz.data(), dz.data() + dz.size());
        return flat;
    }
};

template <class Case>
GradientCase check(const std::string& name, Case& c, std::vector<ParamView> params, const GradientSuiteOptions& o) {
    const auto start = std::chrono::steady_clock::now();
    GradcheckProblem problem{std::move(params), [&c] { return c.loss(); }, [&c] { return c.gradient(); }};
    GradientCase out{name, gradcheck(problem, o.probes, o.step, derive_seed(o.seed, name)), 0.0};
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

std::vector<GradientCase> run_gradient_suite(const GradientSuiteOptions& o) {
    std::vector<GradientCase> cases;
    Rng rng(derive_seed(o.seed, "gradient_suite/data"));
    const speech::SpeechArch arch;
    const auto stack = speech::SpeechStack::build(arch, derive_seed(o.seed, 1));

    {
        EncoderHeadCase c{stack.encoder(), stack.head(), random_matrix(6, arch.input_dim, rng), random_targets(6, rng),
                          {0.7, 1.7, 0.7, 0.7, 1.7, 1.0}};
        std::vector<ParamView> p;
        c.encoder.append_params(p, "encoder");
        c.head.append_params(p, "head");
        cases.push_back(check("encoder_head", c, std::move(p), o));
    }
    {
        MaeCase c{stack.encoder(), stack.decoder(), random_matrix(6, arch.input_dim, rng), {}, 0.5};
        speech::MaskSpec spec;
        c.masked = speech::mask_features(c.x, spec, rng);
        std::vector<ParamView> p;
        c.encoder.append_params(p, "encoder");
        c.decoder.append_params(p, "decoder");
        cases.push_back(check("encoder_decoder", c, std::move(p), o));
    }
    {
        teacher::TeacherArchSpec spec;
        auto t = teacher::Teacher::build(spec, derive_seed(o.seed, 2));
        EncoderHeadCase c{t.projection(), t.classifier(), random_matrix(6, spec.input_dim, rng), random_targets(6, rng),
                          {1.0, 1.0, 0.8, 1.2, 1.0, 1.0}};
        std::vector<ParamView> p;
        c.encoder.append_params(p, "projection");
        c.head.append_params(p, "classifier");
        cases.push_back(check("teacher", c, std::move(p), o));
    }
    {
        HeadCase c{align::ProjectionHead::build({}, derive_seed(o.seed, 3)), random_matrix(8, 128, rng),
                   random_matrix(8, 128, rng)};
        // A zero layer2 would hide most of the network from the check.
        std::normal_distribution<double> n(0.0, 0.1);
        for (Index i = 0; i < c.head.layer2.weights.size(); ++i) c.head.layer2.weights.data()[i] = n(rng);
        for (Index i = 0; i < c.head.bn.gamma.size(); ++i) {
            c.head.bn.gamma[i] = 1.0 + n(rng);
            c.head.bn.beta[i] = n(rng);
        }
        std::vector<ParamView> p = c.head.params();
        p.push_back({"input", std::span<double>(c.z.data(), static_cast<std::size_t>(c.z.size())), nullptr});
        cases.push_back(check("projection_head", c, std::move(p), o));
    }
    return cases;
}

nlohmann::json gradient_suite_json(const std::vector<GradientCase>& cases, const GradientSuiteOptions& o) {
    nlohmann::json rows = nlohmann::json::array();
    bool pass = true;
    for (const auto& c : cases) {
        const bool ok = c.result.max_rel_error < o.tolerance && c.result.probes >= 50;
        pass = pass && ok;
        rows.push_back({{"architecture", c.architecture},
                        {"max_rel_error", c.result.max_rel_error},
                        {"probes", c.result.probes},
                        {"worst_param", c.result.worst_param},
                        {"worst_index", c.result.worst_index},
                        {"pass", ok}});
    }
    return {{"cases", rows}, {"tolerance", o.tolerance}, {"step", o.step}, {"pass", pass}};
}

}  // namespace mint::eval
