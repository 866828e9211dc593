// SPDX-License-Identifier: Apache-2.0
// Command-line driver for the three-stage pipeline.
#include "mint/cli/commands.hpp"
#include "mint/cli/config.hpp"
#include "mint/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace mint::cli;
    CLI::App app{"Speech to MRI knowledge transfer toolkit", "mint"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::string config_file;
    std::uint64_t seed = 0;
    bool serial = false;
    bool small = false;
    std::string out;
    std::string eval_path = "all";
    std::string target;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "global seed (overrides the config)");
        sub->add_flag("--serial", serial, "single-threaded execution");
        sub->add_flag("--small", small, "use the small synthetic profile");
        sub->add_option("--out", out, "output directory (overrides the config)");
    };

    const std::map<std::string, std::string> help{
        {"synth", "generate the synthetic cohorts"},
        {"pretrain", "masked-autoencoder pretraining of the speech encoder"},
        {"finetune", "supervised fine-tuning of the speech encoder"},
        {"teacher", "train and freeze the MRI teacher"},
        {"align", "fit the projection head against the frozen teacher"},
        {"eval", "score the held-out test split"},
        {"ablate", "run the ablation table"},
        {"hpo", "hyperparameter search"},
        {"gradcheck", "finite-difference gradient suite"},
    };
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        add_common(sub);
        if (name == "eval") {
            sub->add_option("--path", eval_path, "speech_only, mri_only, fusion, speech_head, lr_baseline or all")
                ->check(CLI::IsMember({"speech_only", "mri_only", "fusion", "speech_head", "lr_baseline", "all"}));
        }
        if (name == "hpo") {
            sub->add_option("--target", target, "mae, teacher or align")
                ->required()
                ->check(CLI::IsMember({"mae", "teacher", "align"}));
        }
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    const auto* sub = app.get_subcommands().front();

    RunConfig config;
    try {
        config = config_file.empty() ? parse_config(nlohmann::json::object()) : load_config(config_file);
        if (small && config.profile != "small") apply_profile(config, "small");
        if (sub->count("--seed") > 0) config.seed = seed;
        if (!out.empty()) config.paths.out = out;
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << "mint: " << e.what() << '\n';
        return 2;
    }

    CommandOptions options;
    options.eval_path = eval_path;
    options.hpo_target = target;
    options.serial = serial;
    options.log = &std::cerr;
    return run_command(command, config, options);
}
