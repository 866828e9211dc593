// SPDX-License-Identifier: Apache-2.0
#include "mint/errors.hpp"
#include "mint/io/checkpoint.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mint;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "mint_test_checkpoint";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sha256 of the empty string and of abc") {
    CHECK(io::sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::string abc = "abc";
    const std::span<const unsigned char> bytes(reinterpret_cast<const unsigned char*>(abc.data()), abc.size());
    CHECK(io::sha256_hex(bytes) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("blob encoding is little-endian binary64") {
    io::TensorList t;
    Matrix one(1, 1);
    one << 1.0;
    io::append(t, "x", one);
    const auto blob = io::encode_blob(t);
    REQUIRE(blob.size() == 8);
    // 1.0 = 0x3FF0000000000000
    CHECK(blob[7] == 0x3F);
    CHECK(blob[6] == 0xF0);
    CHECK(blob[0] == 0x00);
}

TEST_CASE("checkpoint round trip is bit-exact and tamper-evident") {
    const auto dir = scratch_dir();
    Rng rng(12);
    const auto layer = DenseLayer::fan_in_uniform(7, 3, rng);
    io::TensorList t;
    io::append(t, "layer", layer);
    const std::string digest = io::write_checkpoint(dir, "model", {{"stage", "test"}, {"seed", 12}}, t);
    CHECK(digest == io::blob_checksum(t));

    const auto ckpt = io::read_checkpoint(dir / "model.json");
    CHECK(ckpt.stage() == "test");
    CHECK(ckpt.checksum() == digest);
    const auto back = io::read_dense(ckpt, "layer");
    CHECK(back.weights == layer.weights);
    CHECK(back.bias == layer.bias);

    {
        std::fstream f(dir / "model.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(io::read_checkpoint(dir / "model.json"), ChecksumError);
}

TEST_CASE("canonical JSON has sorted keys and a trailing newline") {
    const std::string text = io::dump_json({{"b", 1}, {"a", {{"d", 2}, {"c", 3}}}});
    CHECK(text.back() == '\n');
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    CHECK(text.find("\"c\"") < text.find("\"d\""));
}

TEST_CASE("missing tensors are reported by name") {
    const io::Checkpoint c;
    try {
        (void)c.tensor("projection.w0");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("projection.w0") != std::string::npos);
    }
}
