// SPDX-License-Identifier: Apache-2.0
#include "mint/data/synthetic.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mint::data {
namespace {

std::string make_id(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%06zu", prefix, i + 1);
    return buf;
}

Matrix gaussian(Index rows, Index cols, double sigma, Rng& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

std::vector<Label> shuffled_labels(std::size_t cn, std::size_t mci, Rng& rng) {
    std::vector<Label> labels(cn, Label::cn);
    labels.insert(labels.end(), mci, Label::mci);
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

struct Block {
    Matrix latents;
    Matrix speech;
    Matrix mri;
};

Block draw(const SyntheticSpec& spec, const std::vector<Label>& labels, double dispersion, bool speech, bool mri,
           const Matrix& a_s, const Matrix& a_m, Rng& rng) {
    const auto n = static_cast<Index>(labels.size());
    Block b;
    b.latents = gaussian(n, static_cast<Index>(spec.latent_dim), dispersion, rng);
    for (Index i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(i);
        b.latents(i, 0) += (labels[li] == Label::mci ? 0.5 : -0.5) * spec.class_separation;
    }
    if (speech) b.speech = b.latents * a_s + gaussian(n, a_s.cols(), spec.noise_sigma_speech, rng);
    if (mri) b.mri = b.latents * a_m + gaussian(n, a_m.cols(), spec.noise_sigma_mri, rng);
    return b;
}

std::vector<double> row_vec(const Matrix& m, Index i) {
    return std::vector<double>(m.row(i).data(), m.row(i).data() + m.cols());
}

}  // namespace

void SyntheticSpec::validate() const {
    if (latent_dim == 0) throw ValidationError("synthetic latent_dim must be positive");
    if (!(class_separation >= 0.0)) throw ValidationError("synthetic class_separation must be non-negative");
    if (!(noise_sigma_speech > 0.0) || !(noise_sigma_mri > 0.0)) {
        throw ValidationError("synthetic noise sigmas must be positive");
    }
    if (!(unlabeled_dispersion > 0.0)) throw ValidationError("synthetic unlabeled_dispersion must be positive");
    if (speech_dim == 0 || mri_dim == 0) throw ValidationError("synthetic feature dimensions must be positive");
}

nlohmann::json SyntheticSpec::to_json() const {
    return {{"latent_dim", latent_dim},
            {"class_separation", class_separation},
            {"noise_sigma_speech", noise_sigma_speech},
            {"noise_sigma_mri", noise_sigma_mri},
            {"unlabeled_dispersion", unlabeled_dispersion},
            {"counts",
             {{"unlabeled_speech", counts.unlabeled_speech},
              {"mri_only_cn", counts.mri_only_cn},
              {"mri_only_mci", counts.mri_only_mci},
              {"paired_cn", counts.paired_cn},
              {"paired_mci", counts.paired_mci}}},
            {"seed", seed},
            {"speech_dim", speech_dim},
            {"mri_dim", mri_dim}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.latent_dim = j.at("latent_dim").get<std::size_t>();
    s.class_separation = j.at("class_separation").get<double>();
    s.noise_sigma_speech = j.at("noise_sigma_speech").get<double>();
    s.noise_sigma_mri = j.at("noise_sigma_mri").get<double>();
    s.unlabeled_dispersion = j.at("unlabeled_dispersion").get<double>();
    const auto& c = j.at("counts");
    s.counts = {c.at("unlabeled_speech").get<std::size_t>(), c.at("mri_only_cn").get<std::size_t>(),
                c.at("mri_only_mci").get<std::size_t>(), c.at("paired_cn").get<std::size_t>(),
                c.at("paired_mci").get<std::size_t>()};
    s.seed = j.at("seed").get<std::uint64_t>();
    s.speech_dim = j.at("speech_dim").get<std::size_t>();
    s.mri_dim = j.at("mri_dim").get<std::size_t>();
    return s;
}

SyntheticSpec SyntheticSpec::default_profile() { return SyntheticSpec{}; }

SyntheticSpec SyntheticSpec::small_profile() {
    SyntheticSpec s;
    s.counts = {1000, 220, 180, 84, 36};
    return s;
}

SyntheticCohorts generate_synthetic_cohort(const SyntheticSpec& spec) {
    spec.validate();
    const auto latent = static_cast<Index>(spec.latent_dim);
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));

    Rng map_rng(derive_seed(spec.seed, "synthetic/maps"));
    SyntheticCohorts out;
    out.speech_map = gaussian(latent, static_cast<Index>(spec.speech_dim), map_scale, map_rng);
    out.mri_map = gaussian(latent, static_cast<Index>(spec.mri_dim), map_scale, map_rng);

    auto init = [&](Cohort& c) {
        c.speech_dim = spec.speech_dim;
        c.mri_dim = spec.mri_dim;
    };
    init(out.unlabeled_speech);
    init(out.mri_only);
    init(out.paired);

    {
        Rng rng(derive_seed(spec.seed, "synthetic/unlabeled"));
        const std::size_t n = spec.counts.unlabeled_speech;
        const auto labels = shuffled_labels(n - n / 2, n / 2, rng);
        const Block b = draw(spec, labels, spec.unlabeled_dispersion, true, false, out.speech_map, out.mri_map, rng);
        for (std::size_t i = 0; i < n; ++i) {
            SubjectRecord r;
            r.subject_id = make_id('U', i);
            r.speech = row_vec(b.speech, static_cast<Index>(i));
            out.unlabeled_speech.records.push_back(std::move(r));
        }
    }
    {
        Rng rng(derive_seed(spec.seed, "synthetic/mri_only"));
        const auto labels = shuffled_labels(spec.counts.mri_only_cn, spec.counts.mri_only_mci, rng);
        const Block b = draw(spec, labels, 1.0, false, true, out.speech_map, out.mri_map, rng);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            SubjectRecord r;
            r.subject_id = make_id('M', i);
            r.label = labels[i];
            r.mri = row_vec(b.mri, static_cast<Index>(i));
            out.mri_only.records.push_back(std::move(r));
        }
    }
    {
        Rng rng(derive_seed(spec.seed, "synthetic/paired"));
        const auto labels = shuffled_labels(spec.counts.paired_cn, spec.counts.paired_mci, rng);
        const Block b = draw(spec, labels, 1.0, true, true, out.speech_map, out.mri_map, rng);
        out.paired_latents = b.latents;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            SubjectRecord r;
            r.subject_id = make_id('P', i);
            r.label = labels[i];
            r.speech = row_vec(b.speech, static_cast<Index>(i));
            r.mri = row_vec(b.mri, static_cast<Index>(i));
            out.paired.records.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace mint::data
