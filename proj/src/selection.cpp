// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iava/error.hpp"

namespace iava::selection {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = m_sum + x;
        if (std::abs(m_sum) >= std::abs(x)) {
            m_comp += (m_sum - t) + x;
        } else {
            m_comp += (x - t) + m_sum;
        }
        m_sum = t;
    }
    double value() const { return m_sum + m_comp; }

private:
    double m_sum = 0.0;
    double m_comp = 0.0;
};

void require_same_length(const AttentionVector& a, const AttentionVector& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::LengthMismatch, "attention vectors have lengths " + std::to_string(a.size()) +
                                                   " and " + std::to_string(b.size()));
    }
}

}  // namespace

AttentionVector::AttentionVector(std::vector<double> scores) : m_scores(std::move(scores)) {
    if (m_scores.empty()) {
        throw Error(ErrorKind::EmptyVector, "attention vector has no tokens");
    }
    for (std::size_t k = 0; k < m_scores.size(); ++k) {
        if (!std::isfinite(m_scores[k])) {
            throw Error(ErrorKind::NonFiniteScore, "attention score at token " + std::to_string(k) + " is not finite");
        }
        if (m_scores[k] < 0.0) {
            throw Error(ErrorKind::NegativeScore, "attention score at token " + std::to_string(k) + " is negative");
        }
    }
}

TokenSelection::TokenSelection(std::vector<std::size_t> indices, std::size_t total_tokens)
    : m_indices(std::move(indices)), m_total(total_tokens) {
    for (std::size_t k = 0; k < m_indices.size(); ++k) {
        if (m_indices[k] >= m_total) {
            throw Error(ErrorKind::InvalidSelection, "token index " + std::to_string(m_indices[k]) +
                                                         " out of range for " + std::to_string(m_total) + " tokens");
        }
        if (k > 0 && m_indices[k] <= m_indices[k - 1]) {
            throw Error(ErrorKind::InvalidSelection, "token indices must be strictly ascending");
        }
    }
}

bool TokenSelection::contains(std::size_t index) const {
    return std::binary_search(m_indices.begin(), m_indices.end(), index);
}

AttentionStats attention_stats(const AttentionVector& att1) {
    const auto scores = att1.scores();
    const auto count = static_cast<double>(scores.size());

    CompensatedSum total;
    for (double x : scores) total.add(x);
    const double mu = total.value() / count;

    CompensatedSum squares;
    for (double x : scores) squares.add((x - mu) * (x - mu));
    const double sigma = std::sqrt(squares.value() / count);

    // Rounding can push mu a hair outside [min, max] for near-constant input.
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    return {std::clamp(mu, *lo, *hi), sigma};
}

DeltaVector delta_attention(const AttentionVector& att1, const AttentionVector& att2) {
    require_same_length(att1, att2);
    DeltaVector out;
    out.deltas.resize(att1.size());
    for (std::size_t k = 0; k < att1.size(); ++k) {
        out.deltas[k] = att2[k] - att1[k];
    }
    return out;
}

TokenSelection select_irrelevant(const AttentionVector& att1, const AttentionVector& att2,
                                 const SelectionParams& params) {
    require_same_length(att1, att2);
    const std::size_t n = att1.size();
    if (params.rank >= n) {
        throw Error(ErrorKind::RankOutOfRange,
                    "rank cutoff " + std::to_string(params.rank) + " outside [0, " + std::to_string(n - 1) + "]");
    }
    if (!std::isfinite(params.lambda)) {
        throw Error(ErrorKind::InvalidConfig, "lambda must be finite");
    }

    const auto stats = attention_stats(att1);
    const auto delta = delta_attention(att1, att2);

    std::vector<double> sorted = delta.deltas;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(params.rank), sorted.end());
    const double rank_threshold = sorted[params.rank];
    const double attention_floor = stats.mu + params.lambda * stats.sigma;

    std::vector<std::size_t> picked;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = delta.deltas[j];
        if (d < 0.0 && d < rank_threshold && att1[j] > attention_floor) {
            picked.push_back(j);
        }
    }
    return TokenSelection(std::move(picked), n);
}

std::optional<SelectionParams> default_params_for(std::size_t n_tokens) {
    if (n_tokens == 32) return SelectionParams{16, -0.1};
    if (n_tokens == 576) return SelectionParams{292, 0.0};
    return std::nullopt;
}

}  // namespace iava::selection
