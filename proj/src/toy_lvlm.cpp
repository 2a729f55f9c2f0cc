// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/toy_lvlm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "iava/error.hpp"

namespace iava::toy {

namespace {

constexpr double kAnswerEosLogit = -20.0;
constexpr double kClosingEosLogit = 20.0;

// Scene generation ranges.
constexpr double kDistractorSaliencyLo = 0.8;
constexpr double kAnswerSaliencyLo = 0.5, kAnswerSaliencyHi = 0.8;
constexpr double kAnswerRelevanceLo = 0.7;
constexpr double kAbsentSaliencyLo = 0.8;
constexpr double kAbsentRelevanceLo = 0.05, kAbsentRelevanceHi = 0.2;
constexpr double kBackgroundHi = 0.3;
constexpr std::uint64_t kMaxAnswers = 3;

double stable_softmax_into(std::vector<double>& x) {
    const double m = *std::max_element(x.begin(), x.end());
    double total = 0.0;
    for (double& v : x) {
        v = std::exp(v - m);
        total += v;
    }
    for (double& v : x) v /= total;
    return total;
}

double evidence_value(const SceneToken& t, double b, double h) {
    const double e = static_cast<int>(t.evidence);
    return e * (1.0 + b * t.relevance) + (t.role == TokenRole::Distractor ? h : 0.0);
}

// Attention-weighted evidence over a set of (query logit, value) pairs.
struct Visible {
    std::vector<double> logit;
    std::vector<double> value;

    void add(double l, double v) {
        logit.push_back(l);
        value.push_back(v);
    }

    double weighted_mean() const {
        if (logit.empty()) return 0.0;
        std::vector<double> w = logit;
        stable_softmax_into(w);
        double acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * value[k];
        return acc;
    }
};

class ToySession final : public protocol::ModelSession {
public:
    explicit ToySession(const ToyConfig& config)
        : ModelSession({config.n_tokens, kVocabSize, vocab_labels()}), m_config(config) {}

protected:
    std::vector<double> do_attention(std::string_view image, std::string_view instruction) override {
        const auto kind = instruction == protocol::kGeneralInstruction ? InstructionKind::General : InstructionKind::Query;
        const auto att = toy_attention(scene_for(image), kind, m_config);
        return {att.scores().begin(), att.scores().end()};
    }

    std::vector<double> do_step(std::string_view image, const protocol::VisualInput& visual, std::string_view,
                                std::span<const protocol::TokenId> prefix) override {
        return toy_step(scene_for(image), visual, prefix, m_config);
    }

private:
    const Scene& scene_for(std::string_view image) {
        const auto index = parse_image_id(image);
        if (!index) throw Error(ErrorKind::SessionFailure, "toy model cannot load image '" + std::string(image) + "'");
        if (!m_cached_index || *m_cached_index != *index) {
            m_cached = scene_at(m_config, *index);
            m_cached_index = index;
        }
        return m_cached;
    }

    ToyConfig m_config;
    Scene m_cached;
    std::optional<std::uint64_t> m_cached_index;
};

}  // namespace

void validate(const ToyConfig& c) {
    if (c.n_tokens == 0) throw Error(ErrorKind::InvalidConfig, "toy needs at least one token");
    if (!(c.rho > 0.0 && c.rho < 1.0)) throw Error(ErrorKind::InvalidConfig, "rho must lie in (0, 1)");
    if (c.n_distractors >= c.n_tokens) throw Error(ErrorKind::InvalidConfig, "n_distractors must be < n_tokens");
    if (!std::isfinite(c.a) || !std::isfinite(c.b) || !std::isfinite(c.h)) {
        throw Error(ErrorKind::InvalidConfig, "toy gains must be finite");
    }
}

std::vector<std::string> vocab_labels() { return {"yes", "no", "eos"}; }

bool scene_invariant_holds(const Scene& scene) {
    const bool has_answer = std::any_of(scene.tokens.begin(), scene.tokens.end(), [](const SceneToken& t) {
        return t.relevance >= 0.5 && t.evidence == Evidence::Present;
    });
    return has_answer == (scene.gold == Answer::Yes);
}

Scene generate_scene(const ToyConfig& config, Rng& rng) {
    validate(config);
    const std::size_t n = config.n_tokens;
    Scene scene;
    scene.tokens.resize(n);
    for (auto& t : scene.tokens) {
        t.saliency = rng.uniform(0.0, kBackgroundHi);
        t.relevance = rng.uniform(0.0, kBackgroundHi);
    }

    // Fisher-Yates order decides which positions get the special roles.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) {
        std::swap(order[k - 1], order[rng.uniform_int(0, k - 1)]);
    }

    std::size_t next = 0;
    for (; next < config.n_distractors; ++next) {
        auto& t = scene.tokens[order[next]];
        t = {rng.uniform(kDistractorSaliencyLo, 1.0), 0.0, Evidence::Present, TokenRole::Distractor};
    }

    const std::size_t free_slots = n - config.n_distractors;
    scene.gold = rng.bernoulli(0.5) ? Answer::Yes : Answer::No;
    if (scene.gold == Answer::Yes) {
        const auto count = std::min<std::size_t>(rng.uniform_int(1, kMaxAnswers), free_slots);
        for (std::size_t k = 0; k < count; ++k, ++next) {
            auto& t = scene.tokens[order[next]];
            t = {rng.uniform(kAnswerSaliencyLo, kAnswerSaliencyHi), rng.uniform(kAnswerRelevanceLo, 1.0),
                 Evidence::Present, TokenRole::Answer};
        }
    } else if (config.max_absent > 0) {
        const auto count = std::min<std::size_t>(rng.uniform_int(0, config.max_absent), free_slots);
        for (std::size_t k = 0; k < count; ++k, ++next) {
            auto& t = scene.tokens[order[next]];
            t = {rng.uniform(kAbsentSaliencyLo, 1.0), rng.uniform(kAbsentRelevanceLo, kAbsentRelevanceHi),
                 Evidence::Absent, TokenRole::AbsentSignal};
        }
    }
    return scene;
}

Scene scene_at(const ToyConfig& config, std::uint64_t index) {
    Rng rng(derive_seed(config.seed, index));
    return generate_scene(config, rng);
}

std::string image_id(std::uint64_t index) { return "toy:" + std::to_string(index); }

std::optional<std::uint64_t> parse_image_id(std::string_view image) {
    constexpr std::string_view prefix = "toy:";
    if (image.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto digits = image.substr(prefix.size());
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
    return value;
}

selection::AttentionVector toy_attention(const Scene& scene, InstructionKind kind, const ToyConfig& config) {
    std::vector<double> logits;
    logits.reserve(scene.tokens.size());
    for (const auto& t : scene.tokens) {
        logits.push_back(kind == InstructionKind::General ? config.a * t.saliency
                                                          : config.a * config.rho * t.saliency + config.b * t.relevance);
    }
    stable_softmax_into(logits);
    return selection::AttentionVector(std::move(logits));
}

double answer_margin(const Scene& scene, const protocol::VisualInput& visual, const ToyConfig& config) {
    const double a = config.a, b = config.b, rho = config.rho, h = config.h;
    auto query_logit = [&](double s, double r) { return a * rho * s + b * r; };

    Visible visible;
    if (std::holds_alternative<protocol::OriginalImage>(visual)) {
        for (const auto& t : scene.tokens) visible.add(query_logit(t.saliency, t.relevance), evidence_value(t, b, h));
    } else if (const auto* mask = std::get_if<negative::MaskSpec>(&visual)) {
        if (mask->total_tokens() != scene.tokens.size()) {
            throw Error(ErrorKind::InvalidSelection, "mask size does not match the scene");
        }
        for (std::size_t k = 0; k < scene.tokens.size(); ++k) {
            const auto& t = scene.tokens[k];
            if (mask->keeps(k)) {
                visible.add(query_logit(t.saliency, t.relevance), evidence_value(t, b, h));
            } else if (mask->policy() != negative::MaskPolicy::Drop) {
                // Zeroed features: the token still draws attention but carries nothing.
                visible.add(query_logit(0.0, 0.0), 0.0);
            }
        }
    } else if (const auto* noise = std::get_if<protocol::NoiseImage>(&visual)) {
        const double keep = 1.0 / (1.0 + noise->sigma * noise->sigma);
        for (const auto& t : scene.tokens) {
            SceneToken blurred = t;
            blurred.relevance = t.relevance * keep;
            const double prior = t.role == TokenRole::Distractor ? h : 0.0;
            const double e = static_cast<int>(t.evidence) * keep;
            visible.add(query_logit(blurred.saliency, blurred.relevance), e * (1.0 + b * blurred.relevance) + prior);
        }
    }
    // NoImage: nothing visible, margin 0.
    return visible.weighted_mean();
}

std::vector<double> toy_step(const Scene& scene, const protocol::VisualInput& visual,
                             std::span<const protocol::TokenId> prefix, const ToyConfig& config) {
    if (!prefix.empty()) return {0.0, 0.0, kClosingEosLogit};
    const double margin = answer_margin(scene, visual, config);
    return {0.5 * margin, -0.5 * margin, kAnswerEosLogit};
}

std::unique_ptr<protocol::ModelSession> make_session(const ToyConfig& config) {
    validate(config);
    return std::make_unique<ToySession>(config);
}

}  // namespace iava::toy
