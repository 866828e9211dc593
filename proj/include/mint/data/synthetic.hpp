// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/data/cohort.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>

namespace mint::data {

struct SyntheticCounts {
    std::size_t unlabeled_speech = 14235;
    std::size_t mri_only_cn = 677;
    std::size_t mri_only_mci = 551;
    std::size_t paired_cn = 187;
    std::size_t paired_mci = 79;
};

// Paired latent-factor cohort. Each subject has u ~ N(mean_y, I) in
// R^latent_dim with class means -/+ (separation / 2) e_1; speech = u A_s + noise,
// MRI = u A_m + noise, with A_s, A_m drawn once from the seed.
struct SyntheticSpec {
    std::size_t latent_dim = 16;
    double class_separation = 3.0;
    double noise_sigma_speech = 3.0;
    double noise_sigma_mri = 2.0;
    // Latent spread of the unlabeled pool relative to labeled subjects.
    double unlabeled_dispersion = 1.5;
    SyntheticCounts counts{};
    std::uint64_t seed = 42;
    std::size_t speech_dim = kSpeechDim;
    std::size_t mri_dim = kMriDim;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);

    // 14,235 / 1,228 (677/551) / 266 (187/79).
    static SyntheticSpec default_profile();
    // 1,000 / 400 (220/180) / 120 (84/36).
    static SyntheticSpec small_profile();
};

struct SyntheticCohorts {
    Cohort unlabeled_speech;
    Cohort mri_only;
    Cohort paired;
    Matrix speech_map;      // latent_dim x speech_dim
    Matrix mri_map;         // latent_dim x mri_dim
    Matrix paired_latents;  // one row per paired record, in record order
};

SyntheticCohorts generate_synthetic_cohort(const SyntheticSpec& spec);

}  // namespace mint::data
