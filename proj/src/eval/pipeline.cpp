// SPDX-License-Identifier: Apache-2.0
#include "mint/eval/pipeline.hpp"

#include "mint/errors.hpp"
#include "mint/io/checkpoint.hpp"

namespace mint::eval {

std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage) {
    return derive_seed(global_seed, "stage/" + stage);
}

PairedSplits make_paired_splits(const data::Cohort& paired, const data::SplitAssignment& split, bool speech,
                                bool mri) {
    PairedSplits s;
    s.train_ids = split.train_ids;
    s.val_ids = split.val_ids;
    s.test_ids = split.test_ids;
    if (speech) {
        s.speech_train = data::speech_matrix(paired, s.train_ids);
        s.speech_val = data::speech_matrix(paired, s.val_ids);
        s.speech_test = data::speech_matrix(paired, s.test_ids);
    }
    if (mri) {
        s.mri_train = data::mri_matrix(paired, s.train_ids);
        s.mri_val = data::mri_matrix(paired, s.val_ids);
        s.mri_test = data::mri_matrix(paired, s.test_ids);
    }
    s.y_train = data::class_labels(paired, s.train_ids);
    s.y_val = data::class_labels(paired, s.val_ids);
    s.y_test = data::class_labels(paired, s.test_ids);
    return s;
}

PretrainOutput run_pretrain(const data::Cohort& unlabeled, const PipelineConfig& cfg, std::uint64_t seed) {
    const auto ids = unlabeled.ids();
    PretrainOutput out{speech::SpeechStack::build(cfg.speech_arch, seed), {}};
    out.mae = speech::pretrain_mae(data::speech_matrix(unlabeled, ids), out.stack, cfg.mae, seed);
    return out;
}

speech::FinetuneResult run_finetune(speech::SpeechStack& stack, const PairedSplits& splits,
                                    const speech::FinetuneConfig& cfg, std::uint64_t seed) {
    auto result =
        speech::finetune_speech(splits.speech_train, splits.y_train, splits.speech_val, splits.y_val, stack, cfg, seed);
    stack.freeze();
    return result;
}

TeacherOutput run_teacher(const data::Cohort& mri_only, const PipelineConfig& cfg, std::uint64_t seed) {
    TeacherOutput out{teacher::Teacher::build(cfg.teacher_arch, seed), {}};
    out.report = teacher::train_teacher(mri_only, out.teacher, cfg.teacher, seed);
    out.teacher.freeze();
    return out;
}

AlignOutput run_align(const speech::SpeechStack& stack, const teacher::Teacher& teacher, const PairedSplits& splits,
                      const align::ProjectionHeadSpec& head_spec, const align::AlignConfig& cfg, std::uint64_t seed) {
    AlignOutput out{align::ProjectionHead::build(head_spec, seed), {}};
    out.run = align::train_alignment(splits.speech_train, splits.mri_train, splits.speech_val, splits.mri_val,
                                     splits.y_val, stack, teacher, out.head, cfg, seed);
    return out;
}

MetricReport report_for(const PredictionSet& p, const PipelineConfig& cfg, std::uint64_t seed) {
    return metric_report(p.scores, p.labels, cfg.bootstrap_resamples, cfg.bootstrap_level, seed, cfg.threads);
}

nlohmann::json TestEvaluation::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [path, r] : reports) j[path] = r.to_json();
    return j;
}

TestEvaluation evaluate_test(const speech::SpeechStack& stack, const teacher::Teacher& teacher,
                             const align::ProjectionHead& head, const align::FrozenChecksums& refs,
                             const PairedSplits& splits, const PipelineConfig& cfg, std::uint64_t seed) {
    const SpeechComponents c{&stack, &head, &teacher, refs};
    TestEvaluation ev;
    ev.predictions["speech_only"] = infer_speech_only(splits.test_ids, splits.speech_test, c);
    ev.predictions["mri_only"] = infer_mri_only(splits.test_ids, splits.mri_test, teacher);
    ev.predictions["fusion"] = infer_fusion(splits.test_ids, splits.speech_test, splits.mri_test, c);
    ev.predictions["speech_head"] = infer_speech_head(splits.test_ids, splits.speech_test, stack);
    const LrModel lr = train_lr_baseline(splits.speech_train, splits.y_train);
    PredictionSet lr_set{splits.test_ids, lr.predict(splits.speech_test), {}, "lr_baseline"};
    ev.predictions["lr_baseline"] = std::move(lr_set);
    for (auto& [path, p] : ev.predictions) {
        p.labels = splits.y_test;
        ev.reports[path] = report_for(p, cfg, seed);
    }
    return ev;
}

AblationRow run_ablation(const std::string& variant, const AblationInputs& in) {
    if (!in.stack || !in.teacher || !in.splits) throw DependencyError("ablation: base components missing");
    PipelineConfig cfg = in.config;
    const speech::SpeechStack* stack = in.stack;
    speech::SpeechStack scratch;
    if (variant == "default") {
    } else if (variant == "mse_only") {
        cfg.align.lambda_cos = 0.0;
    } else if (variant == "cosine_only") {
        cfg.align.lambda_mse = 0.0;
    } else if (variant == "larger_head_128") {
        cfg.head.hidden = 128;
    } else if (variant == "no_dropout") {
        cfg.head.dropout_rate = 0.0;
    } else if (variant == "no_pretrain") {
        scratch = speech::SpeechStack::build(cfg.speech_arch, stage_seed(in.global_seed, "pretrain"));
        speech::FinetuneConfig ft = cfg.finetune;
        ft.from_scratch = true;
        run_finetune(scratch, *in.splits, ft, stage_seed(in.global_seed, "finetune"));
        stack = &scratch;
    } else {
        throw ValidationError("unknown ablation variant '" + variant + "'");
    }
    const auto aligned = run_align(*stack, *in.teacher, *in.splits, cfg.head, cfg.align, stage_seed(in.global_seed, "align"));
    const SpeechComponents c{stack, &aligned.head, in.teacher, aligned.run.after};
    auto speech_set = infer_speech_only(in.splits->test_ids, in.splits->speech_test, c);
    auto fusion_set = infer_fusion(in.splits->test_ids, in.splits->speech_test, in.splits->mri_test, c);
    speech_set.labels = in.splits->y_test;
    fusion_set.labels = in.splits->y_test;
    const std::uint64_t eval_seed = stage_seed(in.global_seed, "eval");
    AblationRow row;
    row.variant = variant;
    row.speech = report_for(speech_set, cfg, eval_seed);
    row.fusion = report_for(fusion_set, cfg, eval_seed);
    return row;
}

nlohmann::json AblationTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"variant", r.variant}};
        if (r.error.empty()) {
            j["speech_auc"] = r.speech.auc;
            j["fusion_auc"] = r.fusion.auc;
            j["delta_speech"] = r.delta_speech;
            j["delta_fusion"] = r.delta_fusion;
            j["speech"] = r.speech.to_json();
            j["fusion"] = r.fusion.to_json();
        } else {
            j["error"] = r.error;
        }
        rows_json.push_back(std::move(j));
    }
    return {{"rows", rows_json}};
}

std::string AblationTable::to_csv() const {
    std::string out = "variant,speech_auc,fusion_auc,delta_speech,delta_fusion,error\n";
    for (const auto& r : rows) {
        out += r.variant + ",";
        if (r.error.empty()) {
            out += data::format_double(r.speech.auc) + "," + data::format_double(r.fusion.auc) + "," +
                   data::format_double(r.delta_speech) + "," + data::format_double(r.delta_fusion) + ",";
        } else {
            std::string msg = r.error;
            for (char& ch : msg) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            out += ",,,," + msg;
        }
        out += '\n';
    }
    return out;
}

AblationTable run_ablation_table(const AblationInputs& inputs) {
    AblationTable table;
    for (const auto& v : ablation_variants()) {
        try {
            table.rows.push_back(run_ablation(v, inputs));
        } catch (const std::exception& e) {
            AblationRow row;
            row.variant = v;
            row.error = e.what();
            table.rows.push_back(std::move(row));
        }
    }
    const AblationRow* base = nullptr;
    for (const auto& r : table.rows) {
        if (r.variant == "default" && r.error.empty()) base = &r;
    }
    if (base) {
        const double s0 = base->speech.auc;
        const double f0 = base->fusion.auc;
        for (auto& r : table.rows) {
            if (!r.error.empty()) continue;
            r.delta_speech = r.speech.auc - s0;
            r.delta_fusion = r.fusion.auc - f0;
        }
    }
    return table;
}

}  // namespace mint::eval
