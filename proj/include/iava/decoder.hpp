// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iava/rng.hpp"
#include "iava/session.hpp"

namespace iava::decoding {

using protocol::TokenId;

/// Paired next-token logits from the original-image and negative passes.
class StepLogits {
public:
    StepLogits(std::vector<double> base, std::vector<double> negative);

    std::span<const double> base() const noexcept { return m_base; }
    std::span<const double> negative() const noexcept { return m_negative; }
    std::size_t size() const noexcept { return m_base.size(); }

private:
    std::vector<double> m_base;
    std::vector<double> m_negative;
};

class ProbabilityVector {
public:
    /// Validates entries in [0, 1] summing to 1 within 1e-9.
    explicit ProbabilityVector(std::vector<double> probs);

    std::span<const double> probs() const noexcept { return m_probs; }
    std::size_t size() const noexcept { return m_probs.size(); }
    double operator[](std::size_t k) const noexcept { return m_probs[k]; }

private:
    std::vector<double> m_probs;
};

enum class SamplingMode { Greedy, Sample };

struct DecodeConfig {
    double alpha = 1.0;
    SamplingMode mode = SamplingMode::Greedy;
    double temperature = 1.0;
    std::size_t max_steps = 8;
    std::vector<TokenId> stop_tokens;
    std::uint64_t seed = 42;
    /// Drop tokens whose base probability is below this fraction of the
    /// base maximum before sampling. 0 disables the filter.
    double min_base_prob = 0.0;
};

/// Throws InvalidConfig on alpha < 0, temperature <= 0, max_steps == 0, or a
/// min_base_prob outside [0, 1].
void validate(const DecodeConfig& config);

std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

/// softmax((1 + alpha) * log_softmax(base) - alpha * log_softmax(negative)).
ProbabilityVector contrastive_distribution(const StepLogits& step, double alpha);

/// Zeroes tokens with p_base < fraction * max(p_base) and renormalizes.
ProbabilityVector apply_plausibility(const ProbabilityVector& dist, std::span<const double> base_logits,
                                     double fraction);

/// Greedy: argmax, lowest index on ties. Sample: draw from dist^(1/T).
TokenId pick_token(const ProbabilityVector& dist, const DecodeConfig& config, Rng& rng);

/// Autoregressive loop over one session. `negative` is the visual input of
/// the contrastive pass; std::nullopt means plain base decoding. The stop
/// token that ends generation is not part of the returned sequence.
std::vector<TokenId> decode_sequence(protocol::ModelSession& session, std::string_view image, std::string_view query,
                                     const std::optional<protocol::VisualInput>& negative,
                                     const DecodeConfig& config);

/// IAVA form: the negative pass sees `selection` kept under `policy`.
std::vector<TokenId> decode_sequence(protocol::ModelSession& session, std::string_view image, std::string_view query,
                                     const selection::TokenSelection& selection, const DecodeConfig& config,
                                     negative::MaskPolicy policy = negative::MaskPolicy::ZeroFill);

}  // namespace iava::decoding
