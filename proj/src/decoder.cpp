// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iava/error.hpp"

namespace iava::decoding {

namespace {

void require_finite(std::span<const double> logits, const char* which) {
    for (double x : logits) {
        if (!std::isfinite(x)) throw Error(ErrorKind::NonFiniteLogit, std::string(which) + " logits contain NaN/Inf");
    }
}

double log_sum_exp(std::span<const double> x) {
    const double m = *std::max_element(x.begin(), x.end());
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - m);
    return m + std::log(acc);
}

}  // namespace

StepLogits::StepLogits(std::vector<double> base, std::vector<double> negative)
    : m_base(std::move(base)), m_negative(std::move(negative)) {
    if (m_base.size() != m_negative.size()) {
        throw Error(ErrorKind::LengthMismatch, "base has " + std::to_string(m_base.size()) + " logits, negative has " +
                                                   std::to_string(m_negative.size()));
    }
    if (m_base.size() < 2) throw Error(ErrorKind::LengthMismatch, "vocabulary must have at least two entries");
    require_finite(m_base, "base");
    require_finite(m_negative, "negative");
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : m_probs(std::move(probs)) {
    if (m_probs.empty()) throw Error(ErrorKind::EmptyVector, "empty distribution");
    double total = 0.0;
    for (double p : m_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::DegenerateDistribution, "probability outside [0, 1]");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorKind::DegenerateDistribution, "probabilities sum to " + std::to_string(total));
    }
}

void validate(const DecodeConfig& config) {
    if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) {
        throw Error(ErrorKind::InvalidConfig, "alpha must be finite and >= 0");
    }
    if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
        throw Error(ErrorKind::InvalidConfig, "temperature must be finite and > 0");
    }
    if (config.max_steps == 0) throw Error(ErrorKind::InvalidConfig, "max_steps must be >= 1");
    if (!(config.min_base_prob >= 0.0 && config.min_base_prob <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "min_base_prob must lie in [0, 1]");
    }
}

std::vector<double> log_softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    std::transform(logits.begin(), logits.end(), out.begin(), [lse](double x) { return x - lse; });
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - m);
        total += out[k];
    }
    for (double& p : out) p /= total;
    return out;
}

ProbabilityVector contrastive_distribution(const StepLogits& step, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::InvalidConfig, "alpha must be finite and >= 0");
    const auto base = log_softmax(step.base());
    const auto neg = log_softmax(step.negative());
    std::vector<double> combined(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        combined[k] = (1.0 + alpha) * base[k] - alpha * neg[k];
    }
    return ProbabilityVector(softmax(combined));
}

ProbabilityVector apply_plausibility(const ProbabilityVector& dist, std::span<const double> base_logits,
                                     double fraction) {
    if (fraction <= 0.0) return dist;
    if (base_logits.size() != dist.size()) throw Error(ErrorKind::LengthMismatch, "plausibility filter size mismatch");
    // p_k < f * p_max  <=>  logit_k - logit_max < log f
    const double top = *std::max_element(base_logits.begin(), base_logits.end());
    const double cut = std::log(fraction);
    std::vector<double> kept(dist.probs().begin(), dist.probs().end());
    double total = 0.0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (base_logits[k] - top < cut) kept[k] = 0.0;
        total += kept[k];
    }
    if (!(total > 0.0)) throw Error(ErrorKind::DegenerateDistribution, "plausibility filter removed every token");
    for (double& p : kept) p /= total;
    return ProbabilityVector(std::move(kept));
}

TokenId pick_token(const ProbabilityVector& dist, const DecodeConfig& config, Rng& rng) {
    const auto probs = dist.probs();
    if (config.mode == SamplingMode::Greedy) {
        // max_element returns the first maximum, i.e. the lowest index on ties.
        const auto best = std::max_element(probs.begin(), probs.end());
        if (!(*best > 0.0)) throw Error(ErrorKind::DegenerateDistribution, "all probabilities are zero");
        return static_cast<TokenId>(best - probs.begin());
    }

    // Temperature reshaping in the log domain: p^(1/T), renormalized.
    double top = -INFINITY;
    for (double p : probs) {
        if (p > 0.0) top = std::max(top, std::log(p) / config.temperature);
    }
    if (!std::isfinite(top)) throw Error(ErrorKind::DegenerateDistribution, "all probabilities are zero");
    std::vector<double> weights(probs.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) weights[k] = std::exp(std::log(probs[k]) / config.temperature - top);
        total += weights[k];
    }
    if (!(total > 0.0)) throw Error(ErrorKind::DegenerateDistribution, "distribution vanished after reshaping");

    const double target = rng.uniform() * total;
    double running = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        running += weights[k];
        last_positive = k;
        if (target < running) return static_cast<TokenId>(k);
    }
    return static_cast<TokenId>(last_positive);
}

std::vector<TokenId> decode_sequence(protocol::ModelSession& session, std::string_view image, std::string_view query,
                                     const std::optional<protocol::VisualInput>& negative,
                                     const DecodeConfig& config) {
    validate(config);
    Rng rng(config.seed);
    std::vector<TokenId> prefix;
    const protocol::VisualInput original = protocol::OriginalImage{};

    for (std::size_t step = 0; step < config.max_steps; ++step) {
        std::vector<double> base_logits;
        std::optional<ProbabilityVector> dist;
        try {
            base_logits = session.step(image, original, query, prefix);
            if (negative) {
                auto neg_logits = session.step(image, *negative, query, prefix);
                dist = contrastive_distribution(StepLogits(base_logits, std::move(neg_logits)), config.alpha);
            } else {
                dist = ProbabilityVector(softmax(base_logits));
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SessionFailure) throw;
            throw Error(ErrorKind::SessionFailure, "decode step " + std::to_string(step) + ": " + e.what());
        }
        if (config.min_base_prob > 0.0) dist = apply_plausibility(*dist, base_logits, config.min_base_prob);

        const TokenId next = pick_token(*dist, config, rng);
        if (std::find(config.stop_tokens.begin(), config.stop_tokens.end(), next) != config.stop_tokens.end()) {
            break;
        }
        prefix.push_back(next);
    }
    return prefix;
}

std::vector<TokenId> decode_sequence(protocol::ModelSession& session, std::string_view image, std::string_view query,
                                     const selection::TokenSelection& selection, const DecodeConfig& config,
                                     negative::MaskPolicy policy) {
    return decode_sequence(session, image, query, protocol::VisualInput{negative::build_mask(selection, policy)},
                           config);
}

}  // namespace iava::decoding
