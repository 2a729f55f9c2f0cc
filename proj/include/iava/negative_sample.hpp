// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iava/selection.hpp"

namespace iava::negative {

/// How the model side hides the tokens a MaskSpec does not keep.
enum class MaskPolicy { ZeroFill, MaskToken, Drop };

std::string_view to_string(MaskPolicy policy);
std::optional<MaskPolicy> parse_mask_policy(std::string_view text);

/// Masked visual input that retains only `keep` out of `total_tokens`.
class MaskSpec {
public:
    MaskSpec(std::vector<std::size_t> keep, std::size_t total_tokens, MaskPolicy policy);

    std::span<const std::size_t> keep() const noexcept { return m_keep; }
    std::size_t total_tokens() const noexcept { return m_total; }
    MaskPolicy policy() const noexcept { return m_policy; }
    std::size_t masked_count() const noexcept { return m_total - m_keep.size(); }
    bool keeps(std::size_t index) const;

    bool operator==(const MaskSpec&) const = default;

private:
    std::vector<std::size_t> m_keep;
    std::size_t m_total;
    MaskPolicy m_policy;
};

MaskSpec build_mask(const selection::TokenSelection& selection, MaskPolicy policy = MaskPolicy::ZeroFill);

/// Recovers the selection a mask was built from.
selection::TokenSelection selection_of(const MaskSpec& mask);

struct IavaMask {
    MaskSpec mask;
};

struct GaussianNoise {
    double sigma = 1.0;  // > 0
};

struct TextOnly {};

/// A concrete negative sample for one example.
using NegativeStrategy = std::variant<IavaMask, GaussianNoise, TextOnly>;

/// Throws InvalidConfig when a Gaussian-noise sigma is not positive and finite.
void validate(const NegativeStrategy& strategy);

/// One-line, locale-independent summary, e.g. "iava-mask keep=1/4 policy=zero-fill".
std::string describe_strategy(const NegativeStrategy& strategy);

/// Shortest round-trip decimal that always shows a fractional part ("1.0", "0.25").
std::string format_real(double value);

}  // namespace iava::negative
