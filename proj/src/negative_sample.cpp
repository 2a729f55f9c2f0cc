// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/negative_sample.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "iava/error.hpp"

namespace iava::negative {

std::string_view to_string(MaskPolicy policy) {
    switch (policy) {
        case MaskPolicy::ZeroFill: return "zero-fill";
        case MaskPolicy::MaskToken: return "mask-token";
        case MaskPolicy::Drop: return "drop";
    }
    return "zero-fill";
}

std::optional<MaskPolicy> parse_mask_policy(std::string_view text) {
    if (text == "zero-fill") return MaskPolicy::ZeroFill;
    if (text == "mask-token") return MaskPolicy::MaskToken;
    if (text == "drop") return MaskPolicy::Drop;
    return std::nullopt;
}

MaskSpec::MaskSpec(std::vector<std::size_t> keep, std::size_t total_tokens, MaskPolicy policy)
    : m_keep(std::move(keep)), m_total(total_tokens), m_policy(policy) {
    // Same invariants as a selection; reuse its validation.
    selection::TokenSelection check(m_keep, m_total);
    (void)check;
}

bool MaskSpec::keeps(std::size_t index) const {
    return std::binary_search(m_keep.begin(), m_keep.end(), index);
}

MaskSpec build_mask(const selection::TokenSelection& selection, MaskPolicy policy) {
    return MaskSpec({selection.indices().begin(), selection.indices().end()}, selection.total_tokens(), policy);
}

selection::TokenSelection selection_of(const MaskSpec& mask) {
    return selection::TokenSelection({mask.keep().begin(), mask.keep().end()}, mask.total_tokens());
}

void validate(const NegativeStrategy& strategy) {
    if (const auto* noise = std::get_if<GaussianNoise>(&strategy)) {
        if (!(noise->sigma > 0.0) || !std::isfinite(noise->sigma)) {
            throw Error(ErrorKind::InvalidConfig, "gaussian-noise sigma must be positive and finite");
        }
    }
}

std::string format_real(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    std::string text(buf, result.ptr);
    if (std::isfinite(value) && text.find_first_of(".e") == std::string::npos) {
        text += ".0";
    }
    return text;
}

std::string describe_strategy(const NegativeStrategy& strategy) {
    struct Visitor {
        std::string operator()(const IavaMask& s) const {
            return "iava-mask keep=" + std::to_string(s.mask.keep().size()) + "/" +
                   std::to_string(s.mask.total_tokens()) + " policy=" + std::string(to_string(s.mask.policy()));
        }
        std::string operator()(const GaussianNoise& s) const { return "gaussian-noise sigma=" + format_real(s.sigma); }
        std::string operator()(const TextOnly&) const { return "text-only"; }
    };
    return std::visit(Visitor{}, strategy);
}

}  // namespace iava::negative
