// SPDX-License-Identifier: Apache-2.0
#include "mint/io/checkpoint.hpp"

#include "mint/errors.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace mint::io {

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw ValidationError("checkpoint has no tensor named '" + name + "'");
}

Matrix Checkpoint::matrix(const std::string& name) const {
    const auto& t = tensor(name);
    Matrix m(t.rows, t.cols);
    std::copy(t.values.begin(), t.values.end(), m.data());
    return m;
}

RowVector Checkpoint::row_vector(const std::string& name) const {
    const auto& t = tensor(name);
    if (t.rows != 1) throw DimensionError("tensor '" + name + "' is not a row vector");
    RowVector v(t.cols);
    std::copy(t.values.begin(), t.values.end(), v.data());
    return v;
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::vector<unsigned char> encode_blob(const TensorList& tensors) {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.values.size();
    std::vector<unsigned char> bytes;
    bytes.reserve(n * 8);
    for (const auto& t : tensors) {
        for (double v : t.values) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffU));
        }
    }
    return bytes;
}

std::string blob_checksum(const TensorList& tensors) { return sha256_hex(encode_blob(tensors)); }

void append(TensorList& out, const std::string& name, const Matrix& m) {
    out.push_back({name, m.rows(), m.cols(), std::vector<double>(m.data(), m.data() + m.size())});
}

void append(TensorList& out, const std::string& name, const RowVector& v) {
    out.push_back({name, 1, v.size(), std::vector<double>(v.data(), v.data() + v.size())});
}

void append(TensorList& out, const std::string& prefix, const DenseLayer& layer) {
    append(out, prefix + ".weights", layer.weights);
    append(out, prefix + ".bias", layer.bias);
}

void append(TensorList& out, const std::string& prefix, const Mlp& mlp) {
    for (std::size_t i = 0; i < mlp.layers().size(); ++i) append(out, prefix + "." + std::to_string(i), mlp.layers()[i]);
}

void append(TensorList& out, const std::string& prefix, const BatchNormState& bn) {
    append(out, prefix + ".gamma", bn.gamma);
    append(out, prefix + ".beta", bn.beta);
    append(out, prefix + ".running_mean", bn.running_mean);
    append(out, prefix + ".running_var", bn.running_var);
}

DenseLayer read_dense(const Checkpoint& ckpt, const std::string& prefix) {
    DenseLayer layer{ckpt.matrix(prefix + ".weights"), ckpt.row_vector(prefix + ".bias")};
    if (layer.bias.size() != layer.weights.cols()) throw DimensionError("layer '" + prefix + "' bias width mismatch");
    return layer;
}

Mlp read_mlp(const Checkpoint& ckpt, const std::string& prefix, std::size_t layer_count, bool activate_last,
             double dropout_rate) {
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < layer_count; ++i) layers.push_back(read_dense(ckpt, prefix + "." + std::to_string(i)));
    return Mlp::from_layers(std::move(layers), activate_last, dropout_rate);
}

BatchNormState read_batchnorm(const Checkpoint& ckpt, const std::string& prefix, double momentum, double epsilon) {
    BatchNormState bn;
    bn.gamma = ckpt.row_vector(prefix + ".gamma");
    bn.beta = ckpt.row_vector(prefix + ".beta");
    bn.running_mean = ckpt.row_vector(prefix + ".running_mean");
    bn.running_var = ckpt.row_vector(prefix + ".running_var");
    bn.momentum = momentum;
    bn.epsilon = epsilon;
    bn.validate();
    return bn;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, dump_json(j)); }

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::string write_checkpoint(const std::filesystem::path& dir, const std::string& stem, nlohmann::json manifest,
                             const TensorList& tensors) {
    std::filesystem::create_directories(dir);
    const auto bytes = encode_blob(tensors);
    const std::string digest = sha256_hex(bytes);
    nlohmann::json table = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        table.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
        offset += t.values.size();
    }
    manifest["format_version"] = kFormatVersion;
    manifest["tensors"] = std::move(table);
    manifest["blob"] = stem + ".bin";
    manifest["blob_sha256"] = digest;
    manifest["dtype"] = "float64-le";

    {
        std::ofstream out(dir / (stem + ".bin"), std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / (stem + ".bin")).string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("failed writing checkpoint blob");
    }
    write_json(dir / (stem + ".json"), manifest);
    return digest;
}

Checkpoint read_checkpoint(const std::filesystem::path& manifest_path) {
    Checkpoint ckpt;
    ckpt.manifest = read_json(manifest_path);
    if (ckpt.manifest.value("format_version", 0) != kFormatVersion) {
        throw ValidationError(manifest_path.string() + ": unsupported checkpoint format");
    }
    const auto blob_path = manifest_path.parent_path() / ckpt.manifest.at("blob").get<std::string>();
    std::ifstream in(blob_path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint blob " + blob_path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string digest = sha256_hex(bytes);
    if (digest != ckpt.manifest.at("blob_sha256").get<std::string>()) {
        throw ChecksumError(blob_path.string() + ": blob digest does not match manifest");
    }
    std::size_t total = 0;
    for (const auto& entry : ckpt.manifest.at("tensors")) {
        NamedTensor t;
        t.name = entry.at("name").get<std::string>();
        t.rows = entry.at("shape").at(0).get<Index>();
        t.cols = entry.at("shape").at(1).get<Index>();
        const auto offset = entry.at("offset").get<std::size_t>();
        const auto count = static_cast<std::size_t>(t.rows * t.cols);
        if ((offset + count) * 8 > bytes.size()) throw ValidationError("checkpoint tensor '" + t.name + "' overruns blob");
        t.values.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(bytes[(offset + i) * 8 + static_cast<std::size_t>(b)]) << (8 * b);
            }
            t.values[i] = std::bit_cast<double>(bits);
        }
        total += count;
        ckpt.tensors.push_back(std::move(t));
    }
    if (total * 8 != bytes.size()) throw ValidationError("checkpoint blob size does not match tensor table");
    return ckpt;
}

}  // namespace mint::io
