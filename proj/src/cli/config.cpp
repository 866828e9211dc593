// SPDX-License-Identifier: Apache-2.0
#include "mint/cli/config.hpp"

#include "mint/errors.hpp"
#include "mint/io/checkpoint.hpp"

#include <fstream>

namespace mint::cli {

using nlohmann::json;

namespace {

json synthetic_json(const RunConfig& c) {
    json j = c.synthetic.to_json();
    j["seed"] = c.synthetic_seed_set ? json(c.synthetic.seed) : json(nullptr);
    return j;
}

bool compatible(const json& def, const json& val) {
    if (def.is_null()) return val.is_null() || val.is_number_unsigned() || val.is_number_integer();
    if (def.is_number()) return val.is_number();
    if (def.is_boolean()) return val.is_boolean();
    if (def.is_string()) return val.is_string();
    if (def.is_array()) return val.is_array();
    if (def.is_object()) return val.is_object();
    return false;
}

void overlay(json& base, const json& user, const std::string& where) {
    if (!user.is_object()) throw ValidationError("config: " + (where.empty() ? "document" : where) + " must be an object");
    for (const auto& [key, value] : user.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ValidationError("config: unknown key '" + path + "'");
        json& slot = base[key];
        if (!compatible(slot, value)) throw ValidationError("config: key '" + path + "' has the wrong type");
        if (slot.is_object()) {
            overlay(slot, value, path);
        } else {
            slot = value;
        }
    }
}

template <class T>
T get(const json& j, const char* key) {
    return j.at(key).get<T>();
}

std::vector<Index> widths(const json& j) { return j.get<std::vector<Index>>(); }

}  // namespace

json RunConfig::to_json() const {
    const auto& p = pipeline;
    return {{"seed", seed},
            {"profile", profile},
            {"paths",
             {{"out", paths.out},
              {"data_dir", paths.data_dir},
              {"checkpoint_dir", paths.checkpoint_dir},
              {"unlabeled", paths.unlabeled},
              {"mri_only", paths.mri_only},
              {"paired_speech", paths.paired_speech},
              {"paired_mri", paths.paired_mri}}},
            {"synthetic", synthetic_json(*this)},
            {"split", {{"seed", split.seed}, {"fractions", split.fractions}}},
            {"speech_arch", {{"hidden_widths", p.speech_arch.hidden_widths}}},
            {"mae",
             {{"lambda_c", p.mae.lambda_c},
              {"mask_ratio", p.mae.mask_ratio},
              {"epochs", p.mae.epochs},
              {"batch_size", p.mae.batch_size},
              {"lr", p.mae.lr},
              {"patience", p.mae.patience},
              {"val_fraction", p.mae.val_fraction}}},
            {"finetune",
             {{"epochs", p.finetune.epochs},
              {"patience", p.finetune.patience},
              {"batch_size", p.finetune.batch_size},
              {"head_lr", p.finetune.head_lr},
              {"encoder_lr", p.finetune.encoder_lr},
              {"use_mixup", p.finetune.use_mixup},
              {"mixup_alpha", p.finetune.mixup_alpha},
              {"label_smoothing", p.finetune.label_smoothing},
              {"class_weighting", p.finetune.class_weighting},
              {"from_scratch", p.finetune.from_scratch}}},
            {"teacher_arch", {{"hidden_widths", p.teacher_arch.hidden_widths}, {"dropout_rate", p.teacher_arch.dropout_rate}}},
            {"teacher",
             {{"epochs", p.teacher.epochs},
              {"patience", p.teacher.patience},
              {"batch_size", p.teacher.batch_size},
              {"lr", p.teacher.lr},
              {"class_weighting", p.teacher.class_weighting},
              {"cv_folds", p.teacher.cv_folds},
              {"val_fraction", p.teacher.val_fraction}}},
            {"head",
             {{"hidden", p.head.hidden}, {"dropout_rate", p.head.dropout_rate}, {"residual_weight", p.head.residual_weight}}},
            {"align",
             {{"lambda_mse", p.align.lambda_mse},
              {"lambda_cos", p.align.lambda_cos},
              {"lr", p.align.lr},
              {"epochs", p.align.epochs},
              {"patience", p.align.patience},
              {"batch_size", p.align.batch_size}}},
            {"eval", {{"bootstrap_resamples", p.bootstrap_resamples}, {"level", p.bootstrap_level}, {"threads", p.threads}}},
            {"hpo",
             {{"budget", hpo.budget},
              {"warmup_epochs", hpo.warmup_epochs},
              {"min_trials", hpo.min_trials},
              {"teacher_folds", hpo.teacher_folds},
              {"grid_folds", hpo.grid_folds},
              {"grid", {{"lambda_mse", hpo.grid.lambda_mse}, {"lambda_cos", hpo.grid.lambda_cos}, {"lr", hpo.grid.lr}}}}}};
}

namespace {

RunConfig from_merged(const json& j) {
    RunConfig c;
    c.seed = get<std::uint64_t>(j, "seed");
    c.profile = get<std::string>(j, "profile");
    const auto& p = j.at("paths");
    c.paths = {get<std::string>(p, "out"),          get<std::string>(p, "data_dir"), get<std::string>(p, "checkpoint_dir"),
               get<std::string>(p, "unlabeled"),    get<std::string>(p, "mri_only"), get<std::string>(p, "paired_speech"),
               get<std::string>(p, "paired_mri")};
    json syn = j.at("synthetic");
    c.synthetic_seed_set = !syn.at("seed").is_null();
    if (!c.synthetic_seed_set) syn["seed"] = 0;
    c.synthetic = data::SyntheticSpec::from_json(syn);
    c.split.seed = get<std::uint64_t>(j.at("split"), "seed");
    c.split.fractions = j.at("split").at("fractions").get<std::array<double, 3>>();

    auto& q = c.pipeline;
    q.speech_arch.hidden_widths = widths(j.at("speech_arch").at("hidden_widths"));
    const auto& m = j.at("mae");
    q.mae.lambda_c = get<double>(m, "lambda_c");
    q.mae.mask_ratio = get<double>(m, "mask_ratio");
    q.mae.epochs = get<int>(m, "epochs");
    q.mae.batch_size = get<std::size_t>(m, "batch_size");
    q.mae.lr = get<double>(m, "lr");
    q.mae.patience = get<int>(m, "patience");
    q.mae.val_fraction = get<double>(m, "val_fraction");
    const auto& f = j.at("finetune");
    q.finetune.epochs = get<int>(f, "epochs");
    q.finetune.patience = get<int>(f, "patience");
    q.finetune.batch_size = get<std::size_t>(f, "batch_size");
    q.finetune.head_lr = get<double>(f, "head_lr");
    q.finetune.encoder_lr = get<double>(f, "encoder_lr");
    q.finetune.use_mixup = get<bool>(f, "use_mixup");
    q.finetune.mixup_alpha = get<double>(f, "mixup_alpha");
    q.finetune.label_smoothing = get<double>(f, "label_smoothing");
    q.finetune.class_weighting = get<bool>(f, "class_weighting");
    q.finetune.from_scratch = get<bool>(f, "from_scratch");
    q.teacher_arch.hidden_widths = widths(j.at("teacher_arch").at("hidden_widths"));
    q.teacher_arch.dropout_rate = get<double>(j.at("teacher_arch"), "dropout_rate");
    const auto& t = j.at("teacher");
    q.teacher.epochs = get<int>(t, "epochs");
    q.teacher.patience = get<int>(t, "patience");
    q.teacher.batch_size = get<std::size_t>(t, "batch_size");
    q.teacher.lr = get<double>(t, "lr");
    q.teacher.class_weighting = get<bool>(t, "class_weighting");
    q.teacher.cv_folds = get<int>(t, "cv_folds");
    q.teacher.val_fraction = get<double>(t, "val_fraction");
    const auto& h = j.at("head");
    q.head.hidden = get<Index>(h, "hidden");
    q.head.dropout_rate = get<double>(h, "dropout_rate");
    q.head.residual_weight = get<double>(h, "residual_weight");
    const auto& a = j.at("align");
    q.align.lambda_mse = get<double>(a, "lambda_mse");
    q.align.lambda_cos = get<double>(a, "lambda_cos");
    q.align.lr = get<double>(a, "lr");
    q.align.epochs = get<int>(a, "epochs");
    q.align.patience = get<int>(a, "patience");
    q.align.batch_size = get<std::size_t>(a, "batch_size");
    const auto& e = j.at("eval");
    q.bootstrap_resamples = get<std::size_t>(e, "bootstrap_resamples");
    q.bootstrap_level = get<double>(e, "level");
    q.threads = get<std::size_t>(e, "threads");
    const auto& o = j.at("hpo");
    c.hpo.budget = get<std::size_t>(o, "budget");
    c.hpo.warmup_epochs = get<int>(o, "warmup_epochs");
    c.hpo.min_trials = get<std::size_t>(o, "min_trials");
    c.hpo.teacher_folds = get<int>(o, "teacher_folds");
    c.hpo.grid_folds = get<int>(o, "grid_folds");
    c.hpo.grid.lambda_mse = o.at("grid").at("lambda_mse").get<std::vector<double>>();
    c.hpo.grid.lambda_cos = o.at("grid").at("lambda_cos").get<std::vector<double>>();
    c.hpo.grid.lr = o.at("grid").at("lr").get<std::vector<double>>();
    return c;
}

}  // namespace

void RunConfig::validate() const {
    if (profile != "default" && profile != "small") throw ValidationError("config: profile must be 'default' or 'small'");
    if (paths.out.empty()) throw ValidationError("config: paths.out must be set");
    resolved_synthetic().validate();
    pipeline.speech_arch.validate();
    pipeline.mae.validate();
    pipeline.finetune.validate();
    pipeline.teacher_arch.validate();
    pipeline.teacher.validate();
    pipeline.head.validate();
    pipeline.align.validate();
    if (pipeline.bootstrap_resamples < 1) throw ValidationError("config: eval.bootstrap_resamples must be positive");
    if (!(pipeline.bootstrap_level > 0.0 && pipeline.bootstrap_level < 1.0)) {
        throw ValidationError("config: eval.level must lie in (0, 1)");
    }
    if (hpo.budget < 1) throw ValidationError("config: hpo.budget must be positive");
    if (hpo.teacher_folds < 2 || hpo.grid_folds < 2) throw ValidationError("config: hpo fold counts must be at least 2");
    hpo.grid.validate();
}

std::filesystem::path RunConfig::data_dir() const {
    return paths.data_dir.empty() ? out_dir() / "data" : std::filesystem::path(paths.data_dir);
}
std::filesystem::path RunConfig::checkpoint_dir() const {
    return paths.checkpoint_dir.empty() ? out_dir() / "checkpoints" : std::filesystem::path(paths.checkpoint_dir);
}
std::filesystem::path RunConfig::unlabeled_file() const {
    return paths.unlabeled.empty() ? data_dir() / "unlabeled_speech.csv" : std::filesystem::path(paths.unlabeled);
}
std::filesystem::path RunConfig::mri_only_file() const {
    return paths.mri_only.empty() ? data_dir() / "mri_only.csv" : std::filesystem::path(paths.mri_only);
}
std::filesystem::path RunConfig::paired_speech_file() const {
    return paths.paired_speech.empty() ? data_dir() / "paired_speech.csv" : std::filesystem::path(paths.paired_speech);
}
std::filesystem::path RunConfig::paired_mri_file() const {
    return paths.paired_mri.empty() ? data_dir() / "paired_mri.csv" : std::filesystem::path(paths.paired_mri);
}

data::SyntheticSpec RunConfig::resolved_synthetic() const {
    data::SyntheticSpec s = synthetic;
    if (!synthetic_seed_set) s.seed = seed;
    return s;
}

void apply_profile(RunConfig& config, const std::string& profile) {
    if (profile == "small") {
        config.synthetic.counts = data::SyntheticSpec::small_profile().counts;
    } else if (profile == "default") {
        config.synthetic.counts = data::SyntheticSpec::default_profile().counts;
    } else {
        throw ValidationError("unknown profile '" + profile + "'");
    }
    config.profile = profile;
}

RunConfig parse_config(const json& user) {
    RunConfig defaults;
    if (user.is_object() && user.contains("profile")) {
        if (!user.at("profile").is_string()) throw ValidationError("config: key 'profile' has the wrong type");
        apply_profile(defaults, user.at("profile").get<std::string>());
    }
    json merged = defaults.to_json();
    overlay(merged, user, "");
    RunConfig c;
    try {
        c = from_merged(merged);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + file.string() + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace mint::cli
