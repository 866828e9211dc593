// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/cli/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mint::cli {

struct RunReport {
    std::string command;
    nlohmann::json config;
    std::string version;
    nlohmann::json metrics = nlohmann::json::object();
    std::map<std::string, std::string> checksums;
    std::vector<std::string> outputs;  // relative to the output dir
    std::optional<std::string> error_type;
    std::string error_message;
    double wall_seconds = 0.0;  // written to the timing sidecar only

    nlohmann::json to_json() const;
};

struct CommandOptions {
    std::string eval_path = "all";  // speech_only | mri_only | fusion | speech_head | lr_baseline | all
    std::string hpo_target;         // mae | teacher | align
    bool serial = false;
    std::ostream* log = nullptr;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> v{"synth", "pretrain", "finetune", "teacher", "align",
                                            "eval",  "ablate",   "hpo",      "gradcheck"};
    return v;
}

std::string version_string();

// Runs one subcommand, always writes its RunReport (with an error section on
// failure) and updates the manifest index. Returns the process exit status.
int run_command(const std::string& command, const RunConfig& config, const CommandOptions& options);

// Same, returning the report instead of only the status.
RunReport execute(const std::string& command, const RunConfig& config, const CommandOptions& options);

}  // namespace mint::cli
