// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/numerics/layers.hpp"
#include "mint/numerics/mlp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mint::io {

inline constexpr int kFormatVersion = 1;

struct NamedTensor {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    std::vector<double> values;  // row-major
};

using TensorList = std::vector<NamedTensor>;

struct Checkpoint {
    nlohmann::json manifest;
    TensorList tensors;

    const NamedTensor& tensor(const std::string& name) const;
    Matrix matrix(const std::string& name) const;
    RowVector row_vector(const std::string& name) const;
    std::string checksum() const { return manifest.at("blob_sha256").get<std::string>(); }
    std::string stage() const { return manifest.at("stage").get<std::string>(); }
};

std::string sha256_hex(std::span<const unsigned char> bytes);

// Little-endian IEEE-754 binary64, tensors concatenated in list order.
std::vector<unsigned char> encode_blob(const TensorList& tensors);
std::string blob_checksum(const TensorList& tensors);

void append(TensorList& out, const std::string& name, const Matrix& m);
void append(TensorList& out, const std::string& name, const RowVector& v);
void append(TensorList& out, const std::string& prefix, const DenseLayer& layer);
void append(TensorList& out, const std::string& prefix, const Mlp& mlp);
void append(TensorList& out, const std::string& prefix, const BatchNormState& bn);

DenseLayer read_dense(const Checkpoint& ckpt, const std::string& prefix);
Mlp read_mlp(const Checkpoint& ckpt, const std::string& prefix, std::size_t layer_count, bool activate_last,
             double dropout_rate);
BatchNormState read_batchnorm(const Checkpoint& ckpt, const std::string& prefix, double momentum, double epsilon);

// Writes `<dir>/<stem>.json` and `<dir>/<stem>.bin`. The manifest gains the
// tensor table, blob file name and blob digest. Returns the digest.
std::string write_checkpoint(const std::filesystem::path& dir, const std::string& stem, nlohmann::json manifest,
                             const TensorList& tensors);

// Reads a manifest and its blob; rejects a blob whose digest differs.
Checkpoint read_checkpoint(const std::filesystem::path& manifest_path);

// Canonical text form used for every JSON artifact (sorted keys, 2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace mint::io
