// SPDX-License-Identifier: Apache-2.0
#include "mint/speech/speech_stack.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/rng.hpp"

namespace mint::speech {

void SpeechArch::validate() const {
    if (input_dim <= 0) throw ValidationError("speech input dimension must be positive");
    if (bottleneck != kBottleneck) {
        throw ValidationError("speech encoder bottleneck must be " + std::to_string(kBottleneck) + ", got " +
                              std::to_string(bottleneck));
    }
    for (Index w : hidden_widths) {
        if (w <= 0) throw ValidationError("speech hidden widths must be positive");
    }
}

std::vector<Index> SpeechArch::encoder_widths() const {
    std::vector<Index> w{input_dim};
    w.insert(w.end(), hidden_widths.begin(), hidden_widths.end());
    w.push_back(bottleneck);
    return w;
}

std::vector<Index> SpeechArch::decoder_widths() const {
    auto w = encoder_widths();
    return {w.rbegin(), w.rend()};
}

nlohmann::json SpeechArch::to_json() const {
    return {{"input_dim", input_dim}, {"hidden_widths", hidden_widths}, {"bottleneck", bottleneck}};
}

SpeechArch SpeechArch::from_json(const nlohmann::json& j) {
    SpeechArch a;
    a.input_dim = j.at("input_dim").get<Index>();
    a.hidden_widths = j.at("hidden_widths").get<std::vector<Index>>();
    a.bottleneck = j.at("bottleneck").get<Index>();
    a.validate();
    return a;
}

SpeechStack SpeechStack::build(const SpeechArch& arch, std::uint64_t seed) {
    arch.validate();
    SpeechStack s;
    s.arch_ = arch;
    Rng enc_rng(derive_seed(seed, "speech/encoder"));
    Rng dec_rng(derive_seed(seed, "speech/decoder"));
    Rng head_rng(derive_seed(seed, "speech/head"));
    s.encoder_ = Mlp::init(arch.encoder_widths(), true, 0.0, enc_rng);
    s.decoder_ = Mlp::init(arch.decoder_widths(), false, 0.0, dec_rng);
    s.head_ = DenseLayer::fan_in_uniform(arch.bottleneck, 2, head_rng);
    return s;
}

void SpeechStack::require_mutable(const char* what) const {
    if (frozen()) throw FrozenError(std::string("speech stack is frozen; cannot modify ") + what);
}

Mlp& SpeechStack::mutable_encoder() {
    require_mutable("encoder");
    return encoder_;
}

Mlp& SpeechStack::mutable_decoder() {
    require_mutable("decoder");
    return decoder_;
}

DenseLayer& SpeechStack::mutable_head() {
    require_mutable("head");
    return head_;
}

void SpeechStack::set_standardizer(data::Standardizer s) {
    require_mutable("standardization");
    if (s.dim() != arch_.input_dim) throw DimensionError("standardizer width does not match speech input");
    standardizer_ = std::move(s);
}

std::vector<ParamView> SpeechStack::encoder_params() {
    require_mutable("encoder");
    std::vector<ParamView> v;
    encoder_.append_params(v, "encoder", &flag_);
    return v;
}

std::vector<ParamView> SpeechStack::decoder_params() {
    require_mutable("decoder");
    std::vector<ParamView> v;
    decoder_.append_params(v, "decoder", &flag_);
    return v;
}

std::vector<ParamView> SpeechStack::head_params() {
    require_mutable("head");
    std::vector<ParamView> v;
    head_.append_params(v, "head", &flag_);
    return v;
}

io::TensorList SpeechStack::tensors() const {
    io::TensorList t;
    if (has_standardizer()) {
        io::append(t, "standardizer.mean", standardizer_.mean);
        io::append(t, "standardizer.std", standardizer_.std);
    }
    io::append(t, "encoder", encoder_);
    io::append(t, "decoder", decoder_);
    io::append(t, "head", head_);
    return t;
}

std::string SpeechStack::checksum() const { return io::blob_checksum(tensors()); }

std::string SpeechStack::decoder_checksum() const {
    io::TensorList t;
    io::append(t, "decoder", decoder_);
    return io::blob_checksum(t);
}

nlohmann::json SpeechStack::manifest(const std::string& stage) const {
    return {{"stage", stage},
            {"component", "speech_stack"},
            {"architecture", arch_.to_json()},
            {"pretrained", pretrained_},
            {"frozen", frozen()},
            {"standardization",
             {{"present", has_standardizer()}, {"tensors", {"standardizer.mean", "standardizer.std"}}}}};
}

SpeechStack SpeechStack::from_checkpoint(const io::Checkpoint& ckpt) {
    const auto& m = ckpt.manifest;
    if (m.value("component", "") != "speech_stack") {
        throw ValidationError("checkpoint is not a speech stack (stage '" + m.value("stage", "") + "')");
    }
    SpeechStack s;
    s.arch_ = SpeechArch::from_json(m.at("architecture"));
    const std::size_t depth = s.arch_.hidden_widths.size() + 1;
    s.encoder_ = io::read_mlp(ckpt, "encoder", depth, true, 0.0);
    s.decoder_ = io::read_mlp(ckpt, "decoder", depth, false, 0.0);
    s.head_ = io::read_dense(ckpt, "head");
    if (s.encoder_.widths() != s.arch_.encoder_widths() || s.decoder_.widths() != s.arch_.decoder_widths()) {
        throw DimensionError("speech checkpoint tensors disagree with declared architecture");
    }
    if (m.at("standardization").at("present").get<bool>()) {
        s.standardizer_.mean = ckpt.row_vector("standardizer.mean");
        s.standardizer_.std = ckpt.row_vector("standardizer.std");
    }
    s.pretrained_ = m.at("pretrained").get<bool>();
    if (m.value("frozen", false)) s.freeze();
    return s;
}

Matrix encode_speech(const Matrix& raw, const SpeechStack& stack) {
    if (raw.cols() != stack.arch().input_dim) {
        throw DimensionError("encode_speech: expected " + std::to_string(stack.arch().input_dim) +
                             " speech features, got " + std::to_string(raw.cols()));
    }
    if (!stack.has_standardizer()) throw DependencyError("encode_speech: speech stack has no standardization statistics");
    return stack.encoder().forward_eval(stack.standardizer().apply(raw));
}

Matrix speech_head_logits(const Matrix& raw, const SpeechStack& stack) {
    return dense_forward(encode_speech(raw, stack), stack.head());
}

}  // namespace mint::speech
