// SPDX-License-Identifier: Apache-2.0
#include "mint/data/split.hpp"

#include "mint/errors.hpp"
#include "mint/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mint::data {
namespace {

std::array<std::vector<std::string>, 2> by_class(std::span<const std::string> ids, std::span<const int> labels) {
    if (ids.size() != labels.size()) throw DimensionError("ids and labels differ in length");
    std::array<std::vector<std::string>, 2> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 (CN) or 1 (MCI)");
        groups[static_cast<std::size_t>(labels[i])].push_back(ids[i]);
    }
    for (auto& g : groups) std::sort(g.begin(), g.end());
    return groups;
}

// Integer per-class counts summing to `total`, each floor(share) or +1.
std::array<std::size_t, 2> largest_remainder(const std::array<std::size_t, 2>& class_sizes, double fraction,
                                             std::size_t total) {
    std::array<std::size_t, 2> counts{};
    std::array<double, 2> remainders{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        const double quota = fraction * static_cast<double>(class_sizes[c]);
        counts[c] = static_cast<std::size_t>(std::floor(quota));
        remainders[c] = quota - std::floor(quota);
        assigned += counts[c];
    }
    std::array<std::size_t, 2> order{0, 1};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
        ++counts[order[k]];
        ++assigned;
    }
    return counts;
}

}  // namespace

SplitAssignment stratified_split(std::span<const std::string> ids, std::span<const int> labels,
                                 std::array<double, 3> fractions, std::uint64_t seed) {
    const double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9 || fractions[0] <= 0.0 || fractions[1] < 0.0 || fractions[2] < 0.0) {
        throw ValidationError("split fractions must be non-negative and sum to 1");
    }
    auto groups = by_class(ids, labels);
    for (std::size_t c = 0; c < 2; ++c) {
        if (groups[c].size() < 3) {
            throw ValidationError("stratified split needs at least 3 subjects per class; class " +
                                  std::string(label_token(label_from_index(static_cast<int>(c)))) + " has " +
                                  std::to_string(groups[c].size()));
        }
    }
    const std::size_t n = ids.size();
    const std::array<std::size_t, 2> sizes{groups[0].size(), groups[1].size()};
    const auto total_for = [n](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(n))); };
    const auto test_counts = largest_remainder(sizes, fractions[2], total_for(fractions[2]));
    const auto val_counts = largest_remainder(sizes, fractions[1], total_for(fractions[1]));

    Rng rng(seed);
    SplitAssignment out;
    out.seed = seed;
    out.fractions = fractions;
    for (std::size_t c = 0; c < 2; ++c) {
        auto& g = groups[c];
        std::shuffle(g.begin(), g.end(), rng);
        if (test_counts[c] + val_counts[c] >= g.size()) {
            throw ValidationError("stratified split leaves no training subjects for a class");
        }
        const auto t = static_cast<std::ptrdiff_t>(test_counts[c]);
        const auto v = static_cast<std::ptrdiff_t>(val_counts[c]);
        out.test_ids.insert(out.test_ids.end(), g.begin(), g.begin() + t);
        out.val_ids.insert(out.val_ids.end(), g.begin() + t, g.begin() + t + v);
        out.train_ids.insert(out.train_ids.end(), g.begin() + t + v, g.end());
    }
    std::sort(out.train_ids.begin(), out.train_ids.end());
    std::sort(out.val_ids.begin(), out.val_ids.end());
    std::sort(out.test_ids.begin(), out.test_ids.end());
    return out;
}

SplitAssignment stratified_split(const Cohort& cohort, std::array<double, 3> fractions, std::uint64_t seed) {
    const auto ids = cohort.labeled_ids();
    return stratified_split(ids, class_labels(cohort, ids), fractions, seed);
}

nlohmann::json SplitAssignment::to_json() const {
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& id : train_ids) assignment[id] = "train";
    for (const auto& id : val_ids) assignment[id] = "val";
    for (const auto& id : test_ids) assignment[id] = "test";
    return {{"seed", seed}, {"fractions", fractions}, {"assignment", assignment}};
}

SplitAssignment SplitAssignment::from_json(const nlohmann::json& j) {
    SplitAssignment s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.fractions = j.at("fractions").get<std::array<double, 3>>();
    for (const auto& [id, part] : j.at("assignment").items()) {
        const auto p = part.get<std::string>();
        if (p == "train") s.train_ids.push_back(id);
        else if (p == "val") s.val_ids.push_back(id);
        else if (p == "test") s.test_ids.push_back(id);
        else throw ValidationError("split file: unknown part '" + p + "' for subject '" + id + "'");
    }
    return s;
}

FoldAssignment stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, int k,
                                std::uint64_t seed) {
    if (k < 2) throw ValidationError("k-fold needs k >= 2");
    auto groups = by_class(ids, labels);
    for (std::size_t c = 0; c < 2; ++c) {
        if (groups[c].size() < static_cast<std::size_t>(k)) {
            throw ValidationError("stratified " + std::to_string(k) + "-fold needs at least " + std::to_string(k) +
                                  " subjects per class; class " +
                                  std::string(label_token(label_from_index(static_cast<int>(c)))) + " has " +
                                  std::to_string(groups[c].size()));
        }
    }
    Rng rng(seed);
    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    std::size_t position = 0;
    for (auto& g : groups) {
        std::shuffle(g.begin(), g.end(), rng);
        for (const auto& id : g) {
            out.fold_of_subject[id] = static_cast<int>(position % static_cast<std::size_t>(k));
            ++position;
        }
    }
    return out;
}

std::vector<std::string> FoldAssignment::fold_ids(int fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of_subject) {
        if (f == fold) out.push_back(id);
    }
    return out;
}

std::vector<std::string> FoldAssignment::train_ids(int fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of_subject) {
        if (f != fold) out.push_back(id);
    }
    return out;
}

std::string FoldAssignment::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& [id, f] : fold_of_subject) {
        for (unsigned char c : id) mix(c);
        mix(':');
        for (unsigned char c : std::to_string(f)) mix(c);
        mix(';');
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json FoldAssignment::to_json() const {
    return {{"k", k}, {"seed", seed}, {"fold_of_subject", fold_of_subject}};
}

std::array<double, 2> class_weights(std::span<const int> labels) {
    std::array<std::size_t, 2> counts{};
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValidationError("labels must be 0 (CN) or 1 (MCI)");
        ++counts[static_cast<std::size_t>(y)];
    }
    if (counts[0] == 0 || counts[1] == 0) throw ValidationError("class weights need both classes present");
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

}  // namespace mint::data
