// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/data/synthetic.hpp"
#include "mint/eval/pipeline.hpp"
#include "mint/hpo/grid.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mint::cli {

struct Paths {
    std::string out = "mint_out";
    std::string data_dir;        // default <out>/data
    std::string checkpoint_dir;  // default <out>/checkpoints
    std::string unlabeled;       // default <data_dir>/unlabeled_speech.csv
    std::string mri_only;        // default <data_dir>/mri_only.csv
    std::string paired_speech;   // default <data_dir>/paired_speech.csv
    std::string paired_mri;      // default <data_dir>/paired_mri.csv
};

struct SplitSettings {
    std::uint64_t seed = 42;
    std::array<double, 3> fractions{0.70, 0.15, 0.15};
};

struct HpoSettings {
    std::size_t budget = 60;
    int warmup_epochs = 10;
    std::size_t min_trials = 5;
    int teacher_folds = 5;
    int grid_folds = 5;
    hpo::AlignGrid grid;
};

struct RunConfig {
    RunConfig() { pipeline.threads = 0; }

    std::uint64_t seed = 1;
    std::string profile = "default";  // default | small
    Paths paths;
    data::SyntheticSpec synthetic;
    bool synthetic_seed_set = false;  // otherwise the global seed is used
    SplitSettings split;
    eval::PipelineConfig pipeline;
    HpoSettings hpo;  // eval.threads 0 means one per hardware thread

    nlohmann::json to_json() const;
    void validate() const;

    std::filesystem::path out_dir() const { return paths.out; }
    std::filesystem::path data_dir() const;
    std::filesystem::path checkpoint_dir() const;
    std::filesystem::path unlabeled_file() const;
    std::filesystem::path mri_only_file() const;
    std::filesystem::path paired_speech_file() const;
    std::filesystem::path paired_mri_file() const;
    data::SyntheticSpec resolved_synthetic() const;
};

// Overlays `user` on the defaults. Every key must already exist in the
// default document with a compatible type; unknown keys are fatal.
RunConfig parse_config(const nlohmann::json& user);
RunConfig load_config(const std::filesystem::path& file);

// Switches the synthetic counts to the small profile.
void apply_profile(RunConfig& config, const std::string& profile);

}  // namespace mint::cli
