// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mint/data/cohort.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mint::data {

struct SplitAssignment {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 42;
    std::array<double, 3> fractions{0.70, 0.15, 0.15};

    nlohmann::json to_json() const;
    static SplitAssignment from_json(const nlohmann::json& j);
};

// Per-class allocation by largest-remainder rounding: test first, then
// validation, the remainder goes to train. Each part's total is
// round(fraction * N); within a class, ids are shuffled with `seed`.
SplitAssignment stratified_split(std::span<const std::string> ids, std::span<const int> labels,
                                 std::array<double, 3> fractions = {0.70, 0.15, 0.15}, std::uint64_t seed = 42);
SplitAssignment stratified_split(const Cohort& cohort, std::array<double, 3> fractions = {0.70, 0.15, 0.15},
                                 std::uint64_t seed = 42);

struct FoldAssignment {
    std::map<std::string, int> fold_of_subject;
    int k = 5;
    std::uint64_t seed = 0;

    std::vector<std::string> fold_ids(int fold) const;
    std::vector<std::string> train_ids(int fold) const;
    // Stable digest over (id, fold) pairs.
    std::string digest() const;
    nlohmann::json to_json() const;
};

// Stratified k-fold: each class is shuffled and the concatenated class lists are
// dealt round-robin, so fold sizes differ by at most one.
FoldAssignment stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, int k,
                                std::uint64_t seed);

// w_c = N / (2 N_c) for the two classes.
std::array<double, 2> class_weights(std::span<const int> labels);

}  // namespace mint::data
