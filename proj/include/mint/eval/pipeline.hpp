// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/align/alignment.hpp"
#include "mint/data/split.hpp"
#include "mint/eval/inference.hpp"
#include "mint/eval/metrics.hpp"
#include "mint/speech/finetune.hpp"
#include "mint/speech/mae.hpp"
#include "mint/teacher/teacher.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mint::eval {

struct PipelineConfig {
    speech::SpeechArch speech_arch;
    speech::MaeConfig mae;
    speech::FinetuneConfig finetune;
    teacher::TeacherArchSpec teacher_arch;
    teacher::TeacherConfig teacher;
    align::ProjectionHeadSpec head;
    align::AlignConfig align;
    std::size_t bootstrap_resamples = 1000;
    double bootstrap_level = 0.95;
    std::size_t threads = 1;
};

// Per-stage seeds are hash(global, stage name).
std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage);

struct PairedSplits {
    std::vector<std::string> train_ids, val_ids, test_ids;
    Matrix speech_train, speech_val, speech_test;
    Matrix mri_train, mri_val, mri_test;
    std::vector<int> y_train, y_val, y_test;
};

// Matrices for a modality are left empty when its flag is off, so a
// speech-only deployment never touches MRI features.
PairedSplits make_paired_splits(const data::Cohort& paired, const data::SplitAssignment& split, bool speech = true,
                                bool mri = true);

struct PretrainOutput {
    speech::SpeechStack stack;
    speech::MaeResult mae;
};

PretrainOutput run_pretrain(const data::Cohort& unlabeled, const PipelineConfig& cfg, std::uint64_t seed);

// Fine-tunes on the paired train/val speech features and freezes the stack.
speech::FinetuneResult run_finetune(speech::SpeechStack& stack, const PairedSplits& splits,
                                    const speech::FinetuneConfig& cfg, std::uint64_t seed);

struct TeacherOutput {
    teacher::Teacher teacher;
    teacher::TeacherReport report;
};

// Trains on the MRI-only cohort and freezes.
TeacherOutput run_teacher(const data::Cohort& mri_only, const PipelineConfig& cfg, std::uint64_t seed);

struct AlignOutput {
    align::ProjectionHead head;
    align::AlignmentRun run;
};

AlignOutput run_align(const speech::SpeechStack& stack, const teacher::Teacher& teacher, const PairedSplits& splits,
                      const align::ProjectionHeadSpec& head_spec, const align::AlignConfig& cfg, std::uint64_t seed);

struct TestEvaluation {
    std::map<std::string, PredictionSet> predictions;  // keyed by path name
    std::map<std::string, MetricReport> reports;

    nlohmann::json to_json() const;
};

// Scores the test split through every path: speech_only, mri_only, fusion,
// speech_head and the logistic-regression baseline.
TestEvaluation evaluate_test(const speech::SpeechStack& stack, const teacher::Teacher& teacher,
                             const align::ProjectionHead& head, const align::FrozenChecksums& refs,
                             const PairedSplits& splits, const PipelineConfig& cfg, std::uint64_t seed);

MetricReport report_for(const PredictionSet& p, const PipelineConfig& cfg, std::uint64_t seed);

// Ablation harness.
inline const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> v{"default",           "mse_only",    "cosine_only",
                                            "larger_head_128",   "no_pretrain", "no_dropout"};
    return v;
}

struct AblationInputs {
    const speech::SpeechStack* stack = nullptr;  // fine-tuned, frozen
    const teacher::Teacher* teacher = nullptr;   // frozen
    const PairedSplits* splits = nullptr;
    PipelineConfig config;
    std::uint64_t global_seed = 0;
};

struct AblationRow {
    std::string variant;
    MetricReport speech;
    MetricReport fusion;
    double delta_speech = 0.0;
    double delta_fusion = 0.0;
    std::string error;
};

AblationRow run_ablation(const std::string& variant, const AblationInputs& inputs);

struct AblationTable {
    std::vector<AblationRow> rows;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Runs all six variants; a failing variant is recorded and the rest continue.
AblationTable run_ablation_table(const AblationInputs& inputs);

}  // namespace mint::eval
