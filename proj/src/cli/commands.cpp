// SPDX-License-Identifier: Apache-2.0
#include "mint/cli/commands.hpp"

#include "mint/align/alignment.hpp"
#include "mint/data/split.hpp"
#include "mint/data/synthetic.hpp"
#include "mint/errors.hpp"
#include "mint/eval/gradient_suite.hpp"
#include "mint/eval/inference.hpp"
#include "mint/eval/pipeline.hpp"
#include "mint/hpo/grid.hpp"
#include "mint/hpo/search.hpp"
#include "mint/io/checkpoint.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

#ifndef MINT_VERSION
#define MINT_VERSION "unknown"
#endif

namespace mint::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("mint ") + MINT_VERSION; }

json RunReport::to_json() const {
    json j = {{"command", command},
              {"config", config},
              {"version", version},
              {"metrics", metrics},
              {"checksums", checksums},
              {"outputs", outputs},
              {"status", error_type ? "error" : "ok"}};
    if (error_type) j["error"] = {{"type", *error_type}, {"message", error_message}};
    return j;
}

namespace {

struct Ctx {
    const RunConfig& cfg;
    const CommandOptions& opt;
    RunReport& report;
    eval::PipelineConfig pipeline;

    fs::path out() const { return cfg.out_dir(); }
    std::uint64_t seed(const std::string& stage) const { return eval::stage_seed(cfg.seed, stage); }

    void log(const std::string& msg) const {
        if (opt.log) *opt.log << "[" << report.command << "] " << msg << '\n';
    }

    std::string rel(const fs::path& p) const {
        const auto r = fs::relative(p, out());
        const std::string s = r.generic_string();
        return s.empty() || s.starts_with("..") ? p.generic_string() : s;
    }

    void record(const fs::path& p) {
        const std::string key = rel(p);
        if (std::find(report.outputs.begin(), report.outputs.end(), key) == report.outputs.end()) {
            report.outputs.push_back(key);
        }
        report.checksums[key] = io::file_sha256(p);
    }

    void write_json(const fs::path& p, const json& j) {
        io::write_json(p, j);
        record(p);
    }

    void write_text(const fs::path& p, const std::string& text) {
        io::write_text(p, text);
        record(p);
    }

    std::string write_checkpoint(const std::string& stem, json manifest, const io::TensorList& tensors) {
        manifest["seed"] = cfg.seed;
        manifest["version"] = version_string();
        const std::string digest = io::write_checkpoint(cfg.checkpoint_dir(), stem, std::move(manifest), tensors);
        record(cfg.checkpoint_dir() / (stem + ".json"));
        record(cfg.checkpoint_dir() / (stem + ".bin"));
        report.metrics["checkpoints"][stem] = digest;
        return digest;
    }
};

data::Cohort load_required(const fs::path& file, data::Schema schema, const std::string& what) {
    if (!fs::exists(file)) {
        throw DependencyError(what + " file " + file.string() + " not found; run `mint synth` or set its path in the config");
    }
    return data::load_cohort(file, schema);
}

io::Checkpoint load_checkpoint(const Ctx& c, const std::string& stem, const std::string& producer) {
    const fs::path p = c.cfg.checkpoint_dir() / (stem + ".json");
    if (!fs::exists(p)) {
        throw DependencyError(c.report.command + " needs checkpoint " + p.string() + "; run `mint " + producer +
                              "` first");
    }
    return io::read_checkpoint(p);
}

fs::path split_file(const Ctx& c) { return c.out() / "split.json"; }

// Loads the stored split (checking it matches the cohort) or, when allowed,
// creates and stores it.
data::SplitAssignment obtain_split(Ctx& c, const data::Cohort& cohort, bool create) {
    const fs::path p = split_file(c);
    const auto labeled = cohort.labeled_ids();
    if (!fs::exists(p)) {
        if (!create) throw DependencyError(c.report.command + " needs the split file " + p.string() + "; run `mint finetune` first");
        auto split = data::stratified_split(labeled, data::class_labels(cohort, labeled), c.cfg.split.fractions,
                                            c.cfg.split.seed);
        c.write_json(p, split.to_json());
        return split;
    }
    auto split = data::SplitAssignment::from_json(io::read_json(p));
    std::set<std::string> in_split(split.train_ids.begin(), split.train_ids.end());
    in_split.insert(split.val_ids.begin(), split.val_ids.end());
    in_split.insert(split.test_ids.begin(), split.test_ids.end());
    const std::set<std::string> in_cohort(labeled.begin(), labeled.end());
    if (in_split != in_cohort) {
        throw ValidationError("split file " + p.string() + " does not match the subject ids of the paired cohort");
    }
    return split;
}

json paths_json(const std::vector<eval::GradientCase>& cases) {
    json j = json::object();
    for (const auto& g : cases) j[g.architecture] = g.result.max_rel_error;
    return j;
}

// ---------------------------------------------------------------- synth

void cmd_synth(Ctx& c) {
    const auto spec = c.cfg.resolved_synthetic();
    c.log("generating synthetic cohorts (seed " + std::to_string(spec.seed) + ")");
    const auto cohorts = data::generate_synthetic_cohort(spec);
    fs::create_directories(c.cfg.data_dir());
    const std::vector<std::pair<fs::path, std::pair<const data::Cohort*, data::Schema>>> files{
        {c.cfg.unlabeled_file(), {&cohorts.unlabeled_speech, data::Schema::speech}},
        {c.cfg.mri_only_file(), {&cohorts.mri_only, data::Schema::mri}},
        {c.cfg.paired_speech_file(), {&cohorts.paired, data::Schema::speech}},
        {c.cfg.paired_mri_file(), {&cohorts.paired, data::Schema::mri}},
    };
    json provenance = {{"spec", spec.to_json()}, {"seed", spec.seed}, {"version", version_string()}};
    for (const auto& [path, what] : files) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        data::write_cohort(path, *what.first, what.second);
        c.record(path);
        provenance["files"][c.rel(path)] = io::file_sha256(path);
    }
    c.write_json(c.cfg.data_dir() / "provenance.json", provenance);
    c.report.metrics["rows"] = {{"unlabeled_speech", cohorts.unlabeled_speech.records.size()},
                                {"mri_only", cohorts.mri_only.records.size()},
                                {"paired", cohorts.paired.records.size()}};
}

// ---------------------------------------------------------------- stage 1

void cmd_pretrain(Ctx& c) {
    const auto unlabeled = load_required(c.cfg.unlabeled_file(), data::Schema::speech, "unlabeled speech");
    c.log("masked-autoencoder pretraining on " + std::to_string(unlabeled.records.size()) + " samples");
    const auto out = eval::run_pretrain(unlabeled, c.pipeline, c.seed("pretrain"));
    json manifest = out.stack.manifest("pretrain");
    manifest["mae"] = c.pipeline.mae.to_json();
    manifest["history"] = history_json(out.mae.history);
    manifest["best_epoch"] = out.mae.best_epoch;
    c.write_checkpoint("speech_pretrained", manifest, out.stack.tensors());
    c.report.metrics["mae"] = {{"epochs_run", out.mae.history.size()},
                               {"best_epoch", out.mae.best_epoch},
                               {"initial_val_loss", out.mae.initial_val_loss},
                               {"best_val_loss", out.mae.best_val_loss},
                               {"best_val_reconstruction", out.mae.best_val_reconstruction}};
}

void cmd_finetune(Ctx& c) {
    const auto paired = load_required(c.cfg.paired_speech_file(), data::Schema::speech, "paired speech");
    const auto split = obtain_split(c, paired, true);
    const auto splits = eval::make_paired_splits(paired, split, true, false);
    speech::SpeechStack stack;
    std::string pretrained_checksum;
    const fs::path pre = c.cfg.checkpoint_dir() / "speech_pretrained.json";
    if (fs::exists(pre)) {
        const auto ckpt = io::read_checkpoint(pre);
        pretrained_checksum = ckpt.checksum();
        stack = speech::SpeechStack::from_checkpoint(ckpt);
    } else if (c.pipeline.finetune.from_scratch) {
        stack = speech::SpeechStack::build(c.pipeline.speech_arch, c.seed("pretrain"));
    } else {
        throw DependencyError("finetune needs checkpoint " + pre.string() +
                              "; run `mint pretrain` first or set finetune.from_scratch");
    }
    c.log("fine-tuning on " + std::to_string(splits.train_ids.size()) + " labeled subjects");
    const auto result = eval::run_finetune(stack, splits, c.pipeline.finetune, c.seed("finetune"));
    json manifest = stack.manifest("finetune");
    manifest["finetune"] = c.pipeline.finetune.to_json();
    manifest["history"] = history_json(result.history);
    manifest["best_epoch"] = result.best_epoch;
    manifest["pretrained_checksum"] = pretrained_checksum;
    c.write_checkpoint("speech_finetuned", manifest, stack.tensors());
    c.report.metrics["finetune"] = {{"epochs_run", result.history.size()},
                                    {"best_epoch", result.best_epoch},
                                    {"best_val_auc", result.best_val_auc},
                                    {"best_val_loss", result.best_val_loss},
                                    {"decoder_checksum", stack.decoder_checksum()}};
}

// ---------------------------------------------------------------- stage 2

void cmd_teacher(Ctx& c) {
    const auto mri = load_required(c.cfg.mri_only_file(), data::Schema::mri, "MRI-only");
    c.log("training the MRI teacher on " + std::to_string(mri.records.size()) + " subjects");
    const auto out = eval::run_teacher(mri, c.pipeline, c.seed("teacher"));
    json manifest = out.teacher.manifest();
    manifest["teacher"] = c.pipeline.teacher.to_json();
    manifest["report"] = out.report.to_json();
    c.write_checkpoint("teacher", manifest, out.teacher.tensors());
    json m = out.report.to_json();
    m.erase("history");
    c.report.metrics["teacher"] = m;
}

// ---------------------------------------------------------------- stage 3

struct Frozen {
    speech::SpeechStack stack;
    teacher::Teacher teacher;
};

Frozen load_frozen(const Ctx& c) {
    Frozen f{speech::SpeechStack::from_checkpoint(load_checkpoint(c, "speech_finetuned", "finetune")),
             teacher::Teacher::from_checkpoint(load_checkpoint(c, "teacher", "teacher"))};
    if (!f.stack.frozen()) throw DependencyError("speech_finetuned checkpoint is not frozen");
    if (!f.teacher.frozen()) throw DependencyError("teacher checkpoint is not frozen");
    return f;
}

data::Cohort load_paired_both(const Ctx& c) {
    return data::join_paired(load_required(c.cfg.paired_speech_file(), data::Schema::speech, "paired speech"),
                             load_required(c.cfg.paired_mri_file(), data::Schema::mri, "paired MRI"));
}

void cmd_align(Ctx& c) {
    const Frozen f = load_frozen(c);
    const auto paired = load_paired_both(c);
    const auto split = obtain_split(c, paired, true);
    const auto splits = eval::make_paired_splits(paired, split);
    c.log("aligning on " + std::to_string(splits.train_ids.size()) + " paired subjects");
    const auto out = eval::run_align(f.stack, f.teacher, splits, c.pipeline.head, c.pipeline.align, c.seed("align"));
    json manifest = align::head_manifest(out.head, c.pipeline.align, out.run.after);
    manifest["history"] = history_json(out.run.fit.history);
    manifest["best_epoch"] = out.run.fit.best_epoch;
    c.write_checkpoint("projection_head", manifest, out.head.tensors());
    c.report.metrics["align"] = {{"epochs_run", out.run.fit.history.size()},
                                 {"best_epoch", out.run.fit.best_epoch},
                                 {"best_val_auc", out.run.fit.best_val_auc},
                                 {"initial_val_loss", out.run.fit.initial_val_loss},
                                 {"best_val_loss", out.run.fit.best_val_loss},
                                 {"encoder_checksum_before", out.run.before.encoder},
                                 {"encoder_checksum_after", out.run.after.encoder},
                                 {"teacher_checksum_before", out.run.before.teacher},
                                 {"teacher_checksum_after", out.run.after.teacher}};
}

// ---------------------------------------------------------------- evaluation

const std::vector<std::string>& eval_paths() {
    static const std::vector<std::string> v{"speech_only", "mri_only", "fusion", "speech_head", "lr_baseline"};
    return v;
}

void write_pca(Ctx& c, const std::vector<std::string>& ids, const std::vector<int>& labels,
               const std::vector<std::pair<std::string, Matrix>>& embeddings) {
    std::string csv = "subject_id,pc1,pc2,label,modality\n";
    json explained = json::object();
    for (const auto& [modality, z] : embeddings) {
        const auto pca = eval::pca_2d(z);
        explained[modality] = {pca.explained[0], pca.explained[1]};
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto r = static_cast<Index>(i);
            csv += ids[i] + "," + data::format_double(pca.coords(r, 0)) + "," + data::format_double(pca.coords(r, 1)) +
                   "," + std::string(data::label_token(data::label_from_index(labels[i]))) + "," + modality + "\n";
        }
    }
    c.write_text(c.out() / "eval" / "pca.csv", csv);
    c.report.metrics["pca_explained_variance"] = explained;
}

void cmd_eval(Ctx& c) {
    const std::string& which = c.opt.eval_path;
    std::vector<std::string> paths;
    if (which == "all") {
        paths = eval_paths();
    } else if (std::find(eval_paths().begin(), eval_paths().end(), which) != eval_paths().end()) {
        paths = {which};
    } else {
        throw ValidationError("unknown evaluation path '" + which + "'");
    }
    auto wants = [&](std::initializer_list<const char*> names) {
        for (const auto* n : names) {
            if (std::find(paths.begin(), paths.end(), n) != paths.end()) return true;
        }
        return false;
    };
    const bool need_speech = wants({"speech_only", "fusion", "speech_head", "lr_baseline"});
    const bool need_mri = wants({"mri_only", "fusion"});
    const bool need_head = wants({"speech_only", "fusion"});

    // Only the files the requested paths need are opened.
    data::Cohort cohort;
    if (need_speech && need_mri) {
        cohort = load_paired_both(c);
    } else if (need_speech) {
        cohort = load_required(c.cfg.paired_speech_file(), data::Schema::speech, "paired speech");
    } else {
        cohort = load_required(c.cfg.paired_mri_file(), data::Schema::mri, "paired MRI");
    }
    const auto split = obtain_split(c, cohort, false);
    const auto splits = eval::make_paired_splits(cohort, split, need_speech, need_mri);

    std::optional<speech::SpeechStack> stack;
    std::optional<teacher::Teacher> teach;
    std::optional<align::ProjectionHead> head;
    align::FrozenChecksums refs;
    if (wants({"speech_only", "fusion", "speech_head"})) {
        stack = speech::SpeechStack::from_checkpoint(load_checkpoint(c, "speech_finetuned", "finetune"));
    }
    if (wants({"speech_only", "fusion", "mri_only"})) {
        teach = teacher::Teacher::from_checkpoint(load_checkpoint(c, "teacher", "teacher"));
    }
    if (need_head) {
        const auto ckpt = load_checkpoint(c, "projection_head", "align");
        head = align::ProjectionHead::from_checkpoint(ckpt);
        refs = {ckpt.manifest.at("encoder_checksum").get<std::string>(),
                ckpt.manifest.at("teacher_checksum").get<std::string>()};
    }

    const std::uint64_t seed = c.seed("eval");
    json all = json::object();
    fs::create_directories(c.out() / "eval");
    for (const auto& p : paths) {
        eval::PredictionSet set;
        if (p == "speech_only") {
            set = eval::infer_speech_only(splits.test_ids, splits.speech_test, {&*stack, &*head, &*teach, refs});
        } else if (p == "mri_only") {
            set = eval::infer_mri_only(splits.test_ids, splits.mri_test, *teach);
        } else if (p == "fusion") {
            set = eval::infer_fusion(splits.test_ids, splits.speech_test, splits.mri_test, {&*stack, &*head, &*teach, refs});
        } else if (p == "speech_head") {
            set = eval::infer_speech_head(splits.test_ids, splits.speech_test, *stack);
        } else {
            const auto model = eval::train_lr_baseline(splits.speech_train, splits.y_train);
            set = {splits.test_ids, model.predict(splits.speech_test), {}, "lr_baseline"};
        }
        set.labels = splits.y_test;
        const auto report = eval::report_for(set, c.pipeline, seed);
        eval::write_predictions(c.out() / "eval" / ("predictions_" + p + ".csv"), set);
        c.record(c.out() / "eval" / ("predictions_" + p + ".csv"));
        json m = report.to_json();
        m["path"] = p;
        m["n_test"] = set.subject_ids.size();
        c.write_json(c.out() / "eval" / ("metrics_" + p + ".json"), m);
        all[p] = m;
    }
    if (which == "all") {
        const Matrix zs = speech::encode_speech(splits.speech_test, *stack);
        write_pca(c, splits.test_ids, splits.y_test,
                  {{"speech", zs},
                   {"aligned", align::project_eval(zs, *head)},
                   {"mri", teacher::embed_mri(splits.mri_test, *teach)}});
    }
    c.report.metrics["eval"] = all;
}

void cmd_ablate(Ctx& c) {
    const Frozen f = load_frozen(c);
    const auto paired = load_paired_both(c);
    const auto split = obtain_split(c, paired, true);
    const auto splits = eval::make_paired_splits(paired, split);
    c.log("running " + std::to_string(eval::ablation_variants().size()) + " ablation variants");
    const eval::AblationInputs inputs{&f.stack, &f.teacher, &splits, c.pipeline, c.cfg.seed};
    const auto table = eval::run_ablation_table(inputs);
    fs::create_directories(c.out() / "ablation");
    c.write_json(c.out() / "ablation" / "ablation.json", table.to_json());
    c.write_text(c.out() / "ablation" / "ablation.csv", table.to_csv());
    json rows = json::array();
    for (const auto& r : table.rows) {
        rows.push_back(r.error.empty() ? json{{"variant", r.variant}, {"speech_auc", r.speech.auc}, {"fusion_auc", r.fusion.auc},
                                              {"delta_fusion", r.delta_fusion}}
                                       : json{{"variant", r.variant}, {"error", r.error}});
    }
    c.report.metrics["ablation"] = rows;
}

// ---------------------------------------------------------------- hpo

void write_search(Ctx& c, const std::string& target, const std::vector<hpo::TrialRecord>& trials, int best,
                  const json& fragment, const std::string& warning) {
    fs::create_directories(c.out() / "hpo");
    c.write_text(c.out() / "hpo" / (target + "_trials.jsonl"), hpo::trials_jsonl(trials));
    c.write_json(c.out() / "hpo" / (target + "_best.json"), fragment);
    std::size_t pruned = 0;
    std::size_t failed = 0;
    for (const auto& t : trials) {
        if (t.status == hpo::TrialStatus::pruned) ++pruned;
        if (t.status == hpo::TrialStatus::failed) ++failed;
    }
    json m = {{"target", target}, {"trials", trials.size()}, {"pruned", pruned}, {"failed", failed}, {"best_fragment", fragment}};
    if (best >= 0) {
        m["best_trial"] = trials[static_cast<std::size_t>(best)].trial_id;
        m["best_objective"] = trials[static_cast<std::size_t>(best)].objective;
    }
    if (!warning.empty()) m["warning"] = warning;
    c.report.metrics["hpo"] = m;
}

hpo::PrunerState pruner_for(const RunConfig& cfg) {
    hpo::PrunerState p;
    p.warmup_epochs = cfg.hpo.warmup_epochs;
    p.min_trials = cfg.hpo.min_trials;
    return p;
}

void hpo_align(Ctx& c) {
    const Frozen f = load_frozen(c);
    const auto paired = load_paired_both(c);
    const auto split = obtain_split(c, paired, true);
    const auto splits = eval::make_paired_splits(paired, split);
    const Matrix zs = speech::encode_speech(splits.speech_train, f.stack);
    const Matrix zm = teacher::embed_mri(splits.mri_train, f.teacher);
    c.log("grid search over " + std::to_string(c.cfg.hpo.grid.size()) + " cells");
    const auto result = hpo::grid_search_align(c.cfg.hpo.grid, splits.train_ids, zs, zm, splits.y_train, f.teacher,
                                               c.pipeline.head, c.pipeline.align, c.cfg.hpo.grid_folds, c.seed("hpo_align"));
    json fragment = json::object();
    if (result.best >= 0) fragment = {{"align", result.best_trial().config}};
    write_search(c, "align", result.trials, result.best, fragment, result.best < 0 ? "every cell failed" : "");
    c.report.metrics["hpo"]["fold_digest"] = result.fold_digest;
    c.report.metrics["hpo"]["fold_fits"] = result.fold_fits;
}

void hpo_teacher(Ctx& c) {
    const auto mri = load_required(c.cfg.mri_only_file(), data::Schema::mri, "MRI-only");
    const auto ids = mri.labeled_ids();
    const auto labels = data::class_labels(mri, ids);
    const auto standardizer = data::Standardizer::fit(data::mri_matrix(mri, ids));
    const Matrix x = standardizer.apply(data::mri_matrix(mri, ids));
    const int k = c.cfg.hpo.teacher_folds;
    const auto folds = data::stratified_kfold(ids, labels, k, c.seed("hpo_teacher/folds"));
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = i;

    auto space = hpo::default_teacher_space();
    space.budget = c.cfg.hpo.budget;
    const auto trainer = [&](const json& trial, std::uint64_t seed, const hpo::ReportFn& report) {
        teacher::TeacherArchSpec arch = c.pipeline.teacher_arch;
        arch.hidden_widths = trial.at("hidden_widths").get<std::vector<Index>>();
        arch.dropout_rate = trial.at("dropout_rate").get<double>();
        teacher::TeacherConfig tc = c.pipeline.teacher;
        tc.lr = trial.at("lr").get<double>();
        hpo::TrialOutcome out;
        out.fold_digest = folds.digest();
        for (int f = 0; f < k; ++f) {
            std::vector<std::size_t> tr;
            std::vector<std::size_t> ho;
            for (const auto& id : folds.train_ids(f)) tr.push_back(row_of.at(id));
            for (const auto& id : folds.fold_ids(f)) ho.push_back(row_of.at(id));
            std::vector<int> ytr;
            std::vector<int> yho;
            for (auto r : tr) ytr.push_back(labels[r]);
            for (auto r : ho) yho.push_back(labels[r]);
            auto t = teacher::Teacher::build(arch, derive_seed(seed, static_cast<std::uint64_t>(f)));
            t.set_standardizer(standardizer);
            bool pruned = false;
            // Fold 0 feeds the pruner; later folds run only for unpruned trials.
            const EpochHook hook = f == 0 ? EpochHook([&](int e, double v) { return pruned = report(e, v); }) : EpochHook{};
            const auto fit = teacher::fit_teacher(gather_rows(x, tr), ytr, gather_rows(x, ho), yho, t, tc,
                                                  derive_seed(seed, "fold" + std::to_string(f)), hook);
            out.fold_values.push_back(fit.best_val_auc);
            if (pruned) break;
        }
        out.objective = pairwise_mean(out.fold_values);
        return out;
    };
    c.log("random search over the teacher space, budget " + std::to_string(space.budget));
    const auto result = hpo::random_search(space, trainer, pruner_for(c.cfg), c.seed("hpo_teacher"));
    json fragment = json::object();
    if (result.best >= 0) {
        const auto& cfg = result.best_trial().config;
        fragment = {{"teacher_arch", {{"hidden_widths", cfg.at("hidden_widths")}, {"dropout_rate", cfg.at("dropout_rate")}}},
                    {"teacher", {{"lr", cfg.at("lr")}}}};
    }
    write_search(c, "teacher", result.trials, result.best, fragment, result.warning);
}

void hpo_mae(Ctx& c) {
    const auto unlabeled = load_required(c.cfg.unlabeled_file(), data::Schema::speech, "unlabeled speech");
    const Matrix raw = data::speech_matrix(unlabeled, unlabeled.ids());
    auto space = hpo::default_mae_space();
    space.budget = c.cfg.hpo.budget;
    const auto trainer = [&](const json& trial, std::uint64_t seed, const hpo::ReportFn& report) {
        speech::MaeConfig mc = c.pipeline.mae;
        mc.lambda_c = trial.at("lambda_c").get<double>();
        mc.mask_ratio = trial.at("mask_ratio").get<double>();
        mc.lr = trial.at("lr").get<double>();
        auto stack = speech::SpeechStack::build(c.pipeline.speech_arch, seed);
        const auto r = speech::pretrain_mae(raw, stack, mc, seed, report);
        return hpo::TrialOutcome{{r.best_val_reconstruction}, r.best_val_reconstruction, ""};
    };
    c.log("random search over the MAE space, budget " + std::to_string(space.budget));
    const auto result = hpo::random_search(space, trainer, pruner_for(c.cfg), c.seed("hpo_mae"));
    json fragment = json::object();
    if (result.best >= 0) fragment = {{"mae", result.best_trial().config}};
    write_search(c, "mae", result.trials, result.best, fragment, result.warning);
}

void cmd_hpo(Ctx& c) {
    const std::string& t = c.opt.hpo_target;
    if (t == "align") {
        hpo_align(c);
    } else if (t == "teacher") {
        hpo_teacher(c);
    } else if (t == "mae") {
        hpo_mae(c);
    } else {
        throw ValidationError("hpo target must be one of mae, teacher, align (got '" + t + "')");
    }
}

// ---------------------------------------------------------------- gradcheck

void cmd_gradcheck(Ctx& c) {
    eval::GradientSuiteOptions o;
    o.seed = c.cfg.seed;
    const auto cases = eval::run_gradient_suite(o);
    const json j = eval::gradient_suite_json(cases, o);
    fs::create_directories(c.out() / "gradcheck");
    c.write_json(c.out() / "gradcheck" / "gradcheck.json", j);
    c.report.metrics["gradcheck"] = paths_json(cases);
    if (!j.at("pass").get<bool>()) throw NumericError("gradient check exceeded tolerance " + std::to_string(o.tolerance));
}

std::string report_name(const std::string& command, const CommandOptions& o) {
    if (command == "eval") return "eval_" + o.eval_path;
    if (command == "hpo") return "hpo_" + (o.hpo_target.empty() ? std::string("unknown") : o.hpo_target);
    return command;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const DependencyError*>(&e)) return "dependency";
    if (dynamic_cast<const ChecksumError*>(&e)) return "checksum";
    if (dynamic_cast<const FrozenError*>(&e)) return "frozen";
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    return "internal";
}

void update_index(const RunConfig& cfg, const std::string& name, const fs::path& report_path, const RunReport& r) {
    const fs::path index = cfg.out_dir() / "manifest.json";
    json j = fs::exists(index) ? io::read_json(index) : json::object();
    j["version"] = version_string();
    json entry = {{"report", fs::relative(report_path, cfg.out_dir()).generic_string()},
                  {"status", r.error_type ? "error" : "ok"},
                  {"outputs", r.checksums}};
    j["commands"][name] = entry;
    for (const auto& [file, sum] : r.checksums) j["artifacts"][file] = sum;
    io::write_json(index, j);
}

}  // namespace

RunReport execute(const std::string& command, const RunConfig& config, const CommandOptions& options) {
    RunReport report;
    report.command = command;
    report.version = version_string();
    report.config = config.to_json();
    const auto start = std::chrono::steady_clock::now();
    eval::PipelineConfig pipeline = config.pipeline;
    if (options.serial) {
        pipeline.threads = 1;
    } else if (pipeline.threads == 0) {
        pipeline.threads = std::max(1u, std::thread::hardware_concurrency());
    }
    Ctx ctx{config, options, report, pipeline};
    try {
        if (command == "synth") {
            cmd_synth(ctx);
        } else if (command == "pretrain") {
            cmd_pretrain(ctx);
        } else if (command == "finetune") {
            cmd_finetune(ctx);
        } else if (command == "teacher") {
            cmd_teacher(ctx);
        } else if (command == "align") {
            cmd_align(ctx);
        } else if (command == "eval") {
            cmd_eval(ctx);
        } else if (command == "ablate") {
            cmd_ablate(ctx);
        } else if (command == "hpo") {
            cmd_hpo(ctx);
        } else if (command == "gradcheck") {
            cmd_gradcheck(ctx);
        } else {
            throw ValidationError("unknown command '" + command + "'");
        }
    } catch (const std::exception& e) {
        report.error_type = error_kind(e);
        report.error_message = e.what();
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string name = report_name(command, options);
    const fs::path reports = config.out_dir() / "reports";
    try {
        fs::create_directories(reports);
        io::write_json(reports / (name + ".json"), report.to_json());
        io::write_json(reports / (name + ".timing.json"), {{"command", name}, {"wall_seconds", report.wall_seconds}});
        update_index(config, name, reports / (name + ".json"), report);
    } catch (const std::exception& e) {
        if (!report.error_type) {
            report.error_type = "io";
            report.error_message = std::string("could not write run report: ") + e.what();
        }
    }
    return report;
}

int run_command(const std::string& command, const RunConfig& config, const CommandOptions& options) {
    const RunReport r = execute(command, config, options);
    if (options.log) {
        if (r.error_type) {
            *options.log << "[" << command << "] error (" << *r.error_type << "): " << r.error_message << '\n';
        } else {
            *options.log << "[" << command << "] ok, " << r.outputs.size() << " output file(s)\n";
        }
    }
    return r.error_type ? 1 : 0;
}

}  // namespace mint::cli
