// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace iava::selection {

/// Nonnegative attention mass over the image tokens under one instruction.
/// Construction validates the invariants (non-empty, finite, >= 0).
class AttentionVector {
public:
    explicit AttentionVector(std::vector<double> scores);

    std::span<const double> scores() const noexcept { return m_scores; }
    std::size_t size() const noexcept { return m_scores.size(); }
    double operator[](std::size_t k) const noexcept { return m_scores[k]; }

    bool operator==(const AttentionVector&) const = default;

private:
    std::vector<double> m_scores;
};

struct AttentionStats {
    double mu = 0.0;
    double sigma = 0.0;  // population standard deviation
};

/// Signed per-token attention change, att2 - att1.
struct DeltaVector {
    std::vector<double> deltas;
};

struct SelectionParams {
    std::size_t rank = 0;  // index into the ascending-sorted delta vector
    double lambda = 0.0;   // standard-deviation multiplier on the att1 threshold
};

/// Sorted, unique image-token indices out of `total_tokens`.
class TokenSelection {
public:
    TokenSelection() = default;
    /// Throws InvalidSelection unless indices are strictly ascending and in range.
    TokenSelection(std::vector<std::size_t> indices, std::size_t total_tokens);

    std::span<const std::size_t> indices() const noexcept { return m_indices; }
    std::size_t total_tokens() const noexcept { return m_total; }
    std::size_t size() const noexcept { return m_indices.size(); }
    bool empty() const noexcept { return m_indices.empty(); }
    bool contains(std::size_t index) const;

    bool operator==(const TokenSelection&) const = default;

private:
    std::vector<std::size_t> m_indices;
    std::size_t m_total = 0;
};

AttentionStats attention_stats(const AttentionVector& att1);

DeltaVector delta_attention(const AttentionVector& att1, const AttentionVector& att2);

/// Tokens j with delta[j] < 0, delta[j] < sorted_ascending(delta)[params.rank]
/// and att1[j] > mu + lambda * sigma. All comparisons are strict.
TokenSelection select_irrelevant(const AttentionVector& att1, const AttentionVector& att2,
                                 const SelectionParams& params);

/// Reference settings keyed by token count: (16, -0.1) for 32 tokens and
/// (292, 0) for 576. Other counts have no default.
std::optional<SelectionParams> default_params_for(std::size_t n_tokens);

}  // namespace iava::selection
