// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/data/cohort.hpp"
#include "mint/io/checkpoint.hpp"
#include "mint/numerics/mlp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace mint::speech {

inline constexpr Index kBottleneck = 128;

struct SpeechArch {
    Index input_dim = static_cast<Index>(data::kSpeechDim);
    std::vector<Index> hidden_widths{256};
    Index bottleneck = kBottleneck;

    void validate() const;
    std::vector<Index> encoder_widths() const;
    std::vector<Index> decoder_widths() const;
    nlohmann::json to_json() const;
    static SpeechArch from_json(const nlohmann::json& j);
};

// Encoder E_s (GELU after every layer), mirrored decoder D_s (linear output),
// linear head C_s, and the per-column standardization shared by all stages.
class SpeechStack {
public:
    SpeechStack() = default;
    static SpeechStack build(const SpeechArch& arch, std::uint64_t seed);

    const SpeechArch& arch() const { return arch_; }
    const Mlp& encoder() const { return encoder_; }
    const Mlp& decoder() const { return decoder_; }
    const DenseLayer& head() const { return head_; }
    const data::Standardizer& standardizer() const { return standardizer_; }
    bool has_standardizer() const { return standardizer_.dim() > 0; }
    bool pretrained() const { return pretrained_; }

    // Mutable access; each throws FrozenError once freeze() was called.
    Mlp& mutable_encoder();
    Mlp& mutable_decoder();
    DenseLayer& mutable_head();
    void set_standardizer(data::Standardizer s);
    void mark_pretrained() { pretrained_ = true; }

    std::vector<ParamView> encoder_params();
    std::vector<ParamView> decoder_params();
    std::vector<ParamView> head_params();

    void freeze() { flag_.set(); }
    bool frozen() const { return flag_.frozen(); }

    io::TensorList tensors() const;
    // Digest of the full parameter blob (equals the checkpoint's blob_sha256).
    std::string checksum() const;
    std::string decoder_checksum() const;

    nlohmann::json manifest(const std::string& stage) const;
    static SpeechStack from_checkpoint(const io::Checkpoint& ckpt);

private:
    void require_mutable(const char* what) const;

    SpeechArch arch_;
    Mlp encoder_;
    Mlp decoder_;
    DenseLayer head_;
    data::Standardizer standardizer_;
    bool pretrained_ = false;
    FreezeFlag flag_;
};

// z^s = E_s(standardize(x)) in eval mode.
Matrix encode_speech(const Matrix& raw, const SpeechStack& stack);
// Logits of the fine-tuned speech head C_s(E_s(x)).
Matrix speech_head_logits(const Matrix& raw, const SpeechStack& stack);

}  // namespace mint::speech
