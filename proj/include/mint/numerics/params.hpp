// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mint {

// Shared flag that marks a parameter set read-only. Copying a model yields an
// independent flag (same value); moving keeps the flag, so views taken before
// a move still observe a later freeze.
class FreezeFlag {
public:
    FreezeFlag() : flag_(std::make_shared<bool>(false)) {}
    FreezeFlag(const FreezeFlag& other) : flag_(std::make_shared<bool>(*other.flag_)) {}
    FreezeFlag& operator=(const FreezeFlag& other) {
        if (this != &other) flag_ = std::make_shared<bool>(*other.flag_);
        return *this;
    }
    FreezeFlag(FreezeFlag&&) noexcept = default;
    FreezeFlag& operator=(FreezeFlag&&) noexcept = default;

    bool frozen() const { return flag_ && *flag_; }
    void set() { *flag_ = true; }
    std::shared_ptr<const bool> observe() const { return flag_; }

private:
    std::shared_ptr<bool> flag_;
};

struct ParamView {
    std::string name;
    std::span<double> values;
    std::shared_ptr<const bool> frozen;  // null for parameters that can never freeze

    bool is_frozen() const { return frozen && *frozen; }
};

struct ConstParamView {
    std::string name;
    std::span<const double> values;
};

inline std::vector<ConstParamView> as_const(const std::vector<ParamView>& views) {
    std::vector<ConstParamView> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back({v.name, v.values});
    return out;
}

inline std::size_t scalar_count(std::span<const ConstParamView> views) {
    std::size_t n = 0;
    for (const auto& v : views) n += v.values.size();
    return n;
}

}  // namespace mint
