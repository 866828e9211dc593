// SPDX-License-Identifier: Apache-2.0
// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
#include "mint/align/alignment.hpp"
#include "mint/cli/commands.hpp"
#include "mint/data/split.hpp"
#include "mint/data/synthetic.hpp"
#include "mint/errors.hpp"
#include "mint/eval/gradient_suite.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/eval/pipeline.hpp"
#include "mint/hpo/search.hpp"
#include "mint/io/checkpoint.hpp"
#include "mint/numerics/optim.hpp"
#include "mint/speech/mae.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using namespace mint;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Env {
    std::string bin;
    fs::path work;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

fs::path fresh(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs the CLI binary, appending its output to `log`. Returns the exit status.
int run_bin(const Env& env, const std::string& args, const fs::path& log) {
    const std::string cmd = env.bin + " " + args + " >>" + log.string() + " 2>&1";
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

void require_ok(const cli::RunReport& r) {
    if (r.error_type) throw std::runtime_error(r.command + " failed: " + r.error_message);
}

cli::CommandOptions serial_options() {
    cli::CommandOptions o;
    o.serial = true;
    return o;
}

// ------------------------------------------------------------------ 1

Outcome gradient_suite(const Env&) {
    const auto start = Clock::now();
    const eval::GradientSuiteOptions opt{};
    const auto cases = eval::run_gradient_suite(opt);
    const double secs = since(start);
    bool ok = cases.size() == 4 && opt.probes >= 50;
    std::string detail;
    for (const auto& c : cases) {
        ok = ok && c.result.max_rel_error < 1e-4 && c.result.probes >= 50;
        detail += c.architecture + "=" + fmt(c.result.max_rel_error, 3) + " ";
    }
    ok = ok && secs < 30.0;
    return {ok, detail + "(" + std::to_string(opt.probes) + " probes each, " + fmt(secs, 3) + " s)"};
}

// ------------------------------------------------------------------ 2

Matrix normal_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    return Matrix::NullaryExpr(r, c, [&] { return n(rng); });
}

Outcome loss_identities(const Env&) {
    std::vector<std::string> failed;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond) failed.push_back(what);
    };
    const Matrix x = normal_matrix(16, static_cast<Index>(data::kSpeechDim), 1);
    Rng mrng(2);
    const auto masks = speech::mask_features(x, {}, mrng).masks;
    expect(speech::mae_loss(x, x, masks, 0.5).loss == 0.0, "mae_loss(x,x)");

    const align::AlignWeights w{0.8, 1.7};
    const Matrix z = normal_matrix(32, 128, 3);
    const Matrix t = normal_matrix(32, 128, 4);
    expect(std::abs(align::align_loss(z, z, w).loss) < 1e-14, "align_loss(z,z)");

    Matrix scaled = z;
    Rng srng(5);
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (Index i = 0; i < scaled.rows(); ++i) scaled.row(i) *= u(srng);
    const double base = align::align_loss(z, t, w).loss;
    expect(std::abs(align::align_loss(scaled, t, w).loss - base) < 1e-10, "scale invariance");

    const Matrix zn = align::l2_normalize(z);
    const Matrix tn = align::l2_normalize(t);
    double identity = 0.0;
    for (Index i = 0; i < zn.rows(); ++i) identity += (2 * w.lambda_mse + w.lambda_cos) * (1.0 - zn.row(i).dot(tn.row(i)));
    identity /= static_cast<double>(zn.rows());
    expect(std::abs(align::align_loss(zn, tn, w).loss - identity) < 1e-10, "(2lm+lc)(1-cos)");

    Matrix e = Matrix::Zero(1, 128);
    e(0, 0) = 1.0;
    expect(align::align_loss(-e, e, w).loss == 4 * w.lambda_mse + 2 * w.lambda_cos, "antiparallel bound");

    if (failed.empty()) return {true, "all five identities hold"};
    std::string d = "failed:";
    for (const auto& f : failed) d += " " + f;
    return {false, d};
}

// ------------------------------------------------------------------ 3

eval::PipelineConfig reduced_pipeline() {
    eval::PipelineConfig cfg;
    cfg.speech_arch.input_dim = 64;
    cfg.speech_arch.hidden_widths = {192};
    cfg.teacher_arch.input_dim = 256;
    cfg.teacher_arch.hidden_widths = {200};
    cfg.mae.epochs = 10;
    cfg.finetune.epochs = 30;
    cfg.teacher.epochs = 30;
    cfg.teacher.cv_folds = 0;
    cfg.align.epochs = 40;
    return cfg;
}

template <class F>
bool throws_frozen(F&& f) {
    try {
        f();
    } catch (const FrozenError&) {
        return true;
    } catch (...) {
        return false;
    }
    return false;
}

Outcome freeze_contract(const Env&) {
    auto spec = data::SyntheticSpec::small_profile();
    spec.speech_dim = 64;
    spec.mri_dim = 256;
    const auto cohorts = data::generate_synthetic_cohort(spec);
    const auto cfg = reduced_pipeline();
    const auto split = data::stratified_split(cohorts.paired, {0.70, 0.15, 0.15}, 42);
    const auto splits = eval::make_paired_splits(cohorts.paired, split);

    auto stack = eval::run_pretrain(cohorts.unlabeled_speech, cfg, 1).stack;
    auto encoder_views = stack.encoder_params();
    eval::run_finetune(stack, splits, cfg.finetune, 2);
    auto teacher_out = eval::run_teacher(cohorts.mri_only, cfg, 3);
    auto& teacher = teacher_out.teacher;

    const std::string enc_before = stack.checksum();
    const std::string tea_before = teacher.checksum();
    const auto aligned = eval::run_align(stack, teacher, splits, cfg.head, cfg.align, 4);
    const bool sums = aligned.run.before.encoder == enc_before && aligned.run.after.encoder == enc_before &&
                      aligned.run.before.teacher == tea_before && aligned.run.after.teacher == tea_before &&
                      stack.checksum() == enc_before && teacher.checksum() == tea_before;

    std::vector<std::vector<double>> g;
    std::vector<ConstParamView> grads;
    for (const auto& p : encoder_views) g.emplace_back(p.values.size(), 0.5);
    for (std::size_t i = 0; i < encoder_views.size(); ++i) grads.push_back({encoder_views[i].name, g[i]});
    auto state = AdamWState::for_params(encoder_views, AdamWHyper{}, "acceptance");
    int blocked = 0;
    blocked += throws_frozen([&] { adamw_step(encoder_views, grads, state, 1e-3); });
    blocked += throws_frozen([&] { (void)stack.mutable_encoder(); });
    blocked += throws_frozen([&] { (void)stack.mutable_head(); });
    blocked += throws_frozen([&] { (void)stack.encoder_params(); });
    blocked += throws_frozen([&] { (void)teacher.params(); });
    blocked += throws_frozen([&] { (void)teacher.mutable_projection(); });
    blocked += throws_frozen([&] { (void)teacher.mutable_classifier(); });
    const bool mutation = blocked == 7 && stack.checksum() == enc_before;

    eval::PairedSplits permuted = splits;
    std::mt19937_64 shuffle(11);
    std::shuffle(permuted.y_train.begin(), permuted.y_train.end(), shuffle);
    const auto again = eval::run_align(stack, teacher, permuted, cfg.head, cfg.align, 4);
    bool invariant = again.head.checksum() == aligned.head.checksum() &&
                     again.run.fit.history.size() == aligned.run.fit.history.size();
    for (std::size_t i = 0; invariant && i < again.run.fit.history.size(); ++i) {
        invariant = again.run.fit.history[i].train_loss == aligned.run.fit.history[i].train_loss;
    }
    return {sums && mutation && invariant, std::string("checksums ") + (sums ? "stable" : "DRIFTED") + ", " +
                                               std::to_string(blocked) + "/7 mutations refused, label permutation " +
                                               (invariant ? "invariant" : "CHANGED the run")};
}

// ------------------------------------------------------------------ 4

Outcome protocol(const Env&) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (int i = 0; i < 266; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%03d", i);
        ids.emplace_back(buf);
        labels.push_back(i < 187 ? 0 : 1);
    }
    const auto s = data::stratified_split(ids, labels, {0.70, 0.15, 0.15}, 42);
    std::map<std::string, int> label_of;
    for (std::size_t i = 0; i < ids.size(); ++i) label_of[ids[i]] = labels[i];
    int cn = 0;
    int mci = 0;
    for (const auto& id : s.test_ids) (label_of[id] ? mci : cn)++;
    const auto w = data::class_weights(labels);
    const bool ok = s.test_ids.size() == 40 && cn == 28 && mci == 12 && std::abs(w[0] - 0.71123) < 1e-5 &&
                    std::abs(w[1] - 1.68354) < 1e-5;
    return {ok, "test " + std::to_string(s.test_ids.size()) + " (" + std::to_string(cn) + " CN / " +
                    std::to_string(mci) + " MCI), weights " + fmt(w[0], 6) + "/" + fmt(w[1], 6)};
}

// ------------------------------------------------------------------ 5

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            den += 1.0;
            num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return num / den;
}

double inverse_normal_cdf(double p) {
    // Bisection on erfc; accurate to well below the precision needed here.
    double lo = -10.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome metric_oracle(const Env&) {
    Rng rng(2024);
    int exact = 0;
    for (int t = 0; t < 1000; ++t) {
        const int n = std::uniform_int_distribution<int>(2, 200)(rng);
        const int grid = std::uniform_int_distribution<int>(2, 50)(rng);
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, grid)(rng) / static_cast<double>(grid);
            y[static_cast<std::size_t>(i)] = std::bernoulli_distribution(0.35)(rng);
        }
        y[0] = 0;
        y[1] = 1;
        exact += eval::auc_roc(s, y) == brute_auc(s, y);
    }

    // Binormal scores with AUC = Phi(d / sqrt 2) = 0.72.
    const double d = std::sqrt(2.0) * inverse_normal_cdf(0.72);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> half;
    std::vector<double> aucs;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> s;
        std::vector<int> y;
        for (int i = 0; i < 40; ++i) {
            const int cls = i < 12 ? 1 : 0;
            y.push_back(cls);
            s.push_back(n01(rng) + (cls ? d : 0.0));
        }
        const auto ci = eval::bootstrap_ci(s, y, 1000, 0.95, static_cast<std::uint64_t>(t), 1);
        half.push_back(0.5 * (ci.high - ci.low));
        aucs.push_back(eval::auc_roc(s, y));
    }
    const double hw = hpo::median(half);
    const bool auc_ok = exact == 1000;
    const bool hw_ok = std::abs(hw - 0.08) <= 0.04;
    return {auc_ok && hw_ok, std::to_string(exact) + "/1000 exact brute-force matches; median bootstrap half-width " +
                                 fmt(hw, 3) + " at n=40 (28/12), median AUC " + fmt(hpo::median(aucs), 3) +
                                 " (target 0.08 +/- 0.04)"};
}

// ------------------------------------------------------------------ 6

json eval_metrics(const fs::path& out) {
    json m = json::object();
    for (const char* p : {"speech_only", "mri_only", "fusion", "speech_head", "lr_baseline"}) {
        m[p] = io::read_json(out / "eval" / (std::string("metrics_") + p + ".json")).at("auc");
    }
    return m;
}

Outcome end_to_end(const Env& env) {
    const auto start = Clock::now();
    std::vector<double> teacher_auc, speech_auc, head_auc, fusion_auc, gap, fusion_margin;
    std::string per_seed;
    for (std::uint64_t seed : {1, 2, 3}) {
        const fs::path out = fresh(env.work / "c6" / ("seed" + std::to_string(seed)));
        const auto cfg = cli::parse_config({{"seed", seed},
                                            {"paths", {{"out", out.string()}}},
                                            {"teacher", {{"cv_folds", 0}}},
                                            {"eval", {{"threads", 1}}}});
        for (const char* cmd : {"synth", "pretrain", "finetune", "teacher", "align", "eval"}) {
            require_ok(cli::execute(cmd, cfg, serial_options()));
        }
        const json m = eval_metrics(out);
        const double mri = m.at("mri_only");
        const double sp = m.at("speech_only");
        const double sh = m.at("speech_head");
        const double fu = m.at("fusion");
        teacher_auc.push_back(mri);
        speech_auc.push_back(sp);
        head_auc.push_back(sh);
        fusion_auc.push_back(fu);
        gap.push_back(std::abs(sp - sh));
        fusion_margin.push_back(fu - std::max(sp, mri));
        per_seed += " [seed " + std::to_string(seed) + ": teacher " + fmt(mri, 3) + ", speech " + fmt(sp, 3) +
                    ", speech_head " + fmt(sh, 3) + ", fusion " + fmt(fu, 3) + "]";
    }
    const double secs = since(start);
    const double mt = hpo::median(teacher_auc);
    const double ms = hpo::median(speech_auc);
    const double mh = hpo::median(head_auc);
    const double mf = hpo::median(fusion_auc);
    const double best_single = std::max(ms, mt);
    const bool ok = mt >= 0.95 && ms >= 0.85 && std::abs(ms - mh) <= 0.1 && mf >= best_single - 0.02 && secs < 1200.0;
    return {ok, "medians: teacher " + fmt(mt, 3) + ", speech_only " + fmt(ms, 3) + ", speech_head " + fmt(mh, 3) +
                    ", fusion " + fmt(mf, 3) + "; " + fmt(secs, 4) + " s;" + per_seed};
}

// ------------------------------------------------------------------ 7

Outcome ablation_direction(const Env& env) {
    const auto start = Clock::now();
    std::vector<double> d_speech, np_speech, d_fusion, nd_fusion;
    for (std::uint64_t seed : {1, 2, 3}) {
        const fs::path out = fresh(env.work / "c7" / ("seed" + std::to_string(seed)));
        const auto cfg = cli::parse_config({{"profile", "small"},
                                            {"seed", seed},
                                            {"paths", {{"out", out.string()}}},
                                            {"eval", {{"threads", 1}}}});
        for (const char* cmd : {"synth", "pretrain", "finetune", "teacher", "ablate"}) {
            require_ok(cli::execute(cmd, cfg, serial_options()));
        }
        const json rows = io::read_json(out / "ablation" / "ablation.json").at("rows");
        std::map<std::string, json> by;
        for (const auto& r : rows) by[r.at("variant").get<std::string>()] = r;
        for (const char* v : {"default", "no_pretrain", "no_dropout"}) {
            if (by.at(v).contains("error")) throw std::runtime_error(std::string(v) + ": " + by.at(v).at("error").get<std::string>());
        }
        d_speech.push_back(by.at("default").at("speech_auc"));
        np_speech.push_back(by.at("no_pretrain").at("speech_auc"));
        d_fusion.push_back(by.at("default").at("fusion_auc"));
        nd_fusion.push_back(by.at("no_dropout").at("fusion_auc"));
    }
    const double secs = since(start);
    const double a = hpo::median(np_speech);
    const double b = hpo::median(d_speech);
    const double c = hpo::median(nd_fusion);
    const double d = hpo::median(d_fusion);
    return {a <= b && c <= d && secs < 900.0, "median speech: no_pretrain " + fmt(a, 3) + " vs default " + fmt(b, 3) +
                                                  "; median fusion: no_dropout " + fmt(c, 3) + " vs default " +
                                                  fmt(d, 3) + "; " + fmt(secs, 4) + " s"};
}

// ------------------------------------------------------------------ 8

const std::vector<std::string>& pipeline_commands() {
    static const std::vector<std::string> v{"synth", "pretrain", "finetune", "teacher",  "align",
                                            "eval",  "ablate",   "gradcheck", "hpo --target align"};
    return v;
}

// Full --small pipeline through the binary into `out`. Returns the failing
// command, or an empty string.
std::string run_small_pipeline(const Env& env, const fs::path& out, const fs::path& log) {
    for (const auto& cmd : pipeline_commands()) {
        const std::string args = cmd + " --small --serial --seed 7 --out " + out.string();
        if (run_bin(env, args, log) != 0) return cmd;
    }
    return {};
}

std::map<std::string, std::string> tree_digests(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), root).generic_string();
        if (rel.size() >= 12 && rel.ends_with(".timing.json")) continue;
        out[rel] = io::file_sha256(e.path());
    }
    return out;
}

Outcome determinism(const Env& env) {
    const fs::path base = fresh(env.work / "c8");
    const fs::path run = base / "run";
    const fs::path log = base / "log.txt";
    const auto start = Clock::now();
    if (auto bad = run_small_pipeline(env, run, log); !bad.empty()) return {false, "first run failed at " + bad};
    const double first_secs = since(start);
    fs::rename(run, base / "first");
    if (auto bad = run_small_pipeline(env, run, log); !bad.empty()) return {false, "second run failed at " + bad};
    const auto a = tree_digests(base / "first");
    const auto b = tree_digests(run);
    std::vector<std::string> differ;
    for (const auto& [file, sum] : a) {
        auto it = b.find(file);
        if (it == b.end() || it->second != sum) differ.push_back(file);
    }
    for (const auto& [file, sum] : b) {
        if (!a.count(file)) differ.push_back(file);
    }
    std::size_t ckpt = 0;
    std::size_t preds = 0;
    std::size_t reports = 0;
    for (const auto& [file, sum] : a) {
        ckpt += file.starts_with("checkpoints/");
        preds += file.starts_with("eval/predictions_");
        reports += file.starts_with("reports/");
    }
    const bool ok = differ.empty() && ckpt > 0 && preds > 0 && reports > 0;
    std::string detail = std::to_string(a.size()) + " files compared (" + std::to_string(ckpt) + " checkpoint, " +
                         std::to_string(preds) + " prediction, " + std::to_string(reports) +
                         " report); first run " + fmt(first_secs, 4) + " s";
    if (!differ.empty()) detail += "; differing: " + differ.front() + " and " + std::to_string(differ.size() - 1) + " more";
    return {ok, detail};
}

// ------------------------------------------------------------------ 9

Outcome deployment(const Env& env) {
    const fs::path base = fresh(env.work / "c9");
    const fs::path out = base / "run";
    const fs::path log = base / "log.txt";
    for (const char* cmd : {"synth", "pretrain", "finetune", "teacher", "align"}) {
        if (run_bin(env, std::string(cmd) + " --small --serial --seed 3 --out " + out.string(), log) != 0) {
            return {false, std::string("setup failed at ") + cmd};
        }
    }
    const std::string eval_args = "eval --path speech_only --small --serial --seed 3 --out " + out.string();
    if (run_bin(env, eval_args, log) != 0) return {false, "speech_only eval failed with MRI present"};
    const std::string with_mri = slurp(out / "eval" / "predictions_speech_only.csv");
    fs::remove(out / "data" / "paired_mri.csv");
    fs::remove(out / "data" / "mri_only.csv");
    const bool gone = !fs::exists(out / "data" / "paired_mri.csv") && !fs::exists(out / "data" / "mri_only.csv");
    const int status = run_bin(env, eval_args, log);
    const std::string without = slurp(out / "eval" / "predictions_speech_only.csv");
    const int fusion = run_bin(env, "eval --path fusion --small --serial --seed 3 --out " + out.string(), log);
    const bool ok = gone && status == 0 && without == with_mri && fusion != 0;
    return {ok, std::string("MRI files deleted; speech_only exit ") + std::to_string(status) + ", predictions " +
                    (without == with_mri ? "identical" : "DIFFERENT") + "; fusion exit " + std::to_string(fusion)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mint acceptance runner"};
    Env env;
    std::string work = "acceptance_work";
    std::vector<int> only;
    app.add_option("--bin", env.bin, "path to the mint binary")->required();
    app.add_option("--work", work, "scratch directory");
    app.add_option("--only", only, "criterion numbers to run");
    CLI11_PARSE(app, argc, argv);
    env.work = fs::absolute(work);
    fs::create_directories(env.work);

    const std::vector<std::pair<std::string, std::function<Outcome(const Env&)>>> criteria{
        {"gradient suite", gradient_suite},
        {"loss identities", loss_identities},
        {"freeze contract", freeze_contract},
        {"protocol reproduction", protocol},
        {"metric oracle", metric_oracle},
        {"end-to-end synthetic transfer", end_to_end},
        {"ablation directionality", ablation_direction},
        {"determinism", determinism},
        {"deployment contract", deployment},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second(env);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << number << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
