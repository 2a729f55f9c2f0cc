// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iava/rng.hpp"
#include "iava/selection.hpp"
#include "iava/session.hpp"

namespace iava::toy {

// A synthetic vision-language model over a three-word vocabulary. Scenes
// hold a few very salient "distractor" tokens that spuriously signal
// presence; a prior term h pushes the answer toward "yes" whenever the
// distractors are visible, so plain decoding hallucinates on gold-no scenes.

enum class Evidence : int { Absent = -1, Neutral = 0, Present = 1 };

enum class TokenRole { Background, Distractor, Answer, AbsentSignal };

struct SceneToken {
    double saliency = 0.0;   // s in [0, 1]
    double relevance = 0.0;  // r in [0, 1]
    Evidence evidence = Evidence::Neutral;
    TokenRole role = TokenRole::Background;
};

enum class Answer { Yes, No };

struct Scene {
    std::vector<SceneToken> tokens;
    Answer gold = Answer::No;
};

struct ToyConfig {
    std::size_t n_tokens = 32;
    std::size_t n_distractors = 6;
    double a = 6.0;    // saliency gain
    double b = 8.0;    // relevance gain
    double rho = 0.25; // saliency retained under a specific query
    double h = 2.0;    // hallucination prior on visible distractors
    std::uint64_t seed = 42;
    /// Gold-no scenes carry 0..max_absent salient, weakly relevant tokens
    /// with absent-signal evidence. 0 disables them.
    std::size_t max_absent = 4;
};

/// Throws InvalidConfig unless 0 < rho < 1 and n_distractors < n_tokens.
void validate(const ToyConfig& config);

enum class Vocab : protocol::TokenId { Yes = 0, No = 1, Eos = 2 };
inline constexpr std::size_t kVocabSize = 3;
std::vector<std::string> vocab_labels();

inline constexpr std::string_view kToyQuery = "Is the target object present in the image?";

/// Gold is yes iff some token has relevance >= 0.5 and present evidence.
bool scene_invariant_holds(const Scene& scene);

Scene generate_scene(const ToyConfig& config, Rng& rng);

/// Scene `index` of the seeded stream; independent of generation order.
Scene scene_at(const ToyConfig& config, std::uint64_t index);

/// "toy:<index>" <-> index.
std::string image_id(std::uint64_t index);
std::optional<std::uint64_t> parse_image_id(std::string_view image);

enum class InstructionKind { General, Query };

/// General: softmax(a * s). Query: softmax(a * rho * s + b * r).
selection::AttentionVector toy_attention(const Scene& scene, InstructionKind kind, const ToyConfig& config);

/// The yes-minus-no logit margin for one visual variant.
double answer_margin(const Scene& scene, const protocol::VisualInput& visual, const ToyConfig& config);

/// Logits over {yes, no, eos}. Empty prefix: answer logits; otherwise eos.
std::vector<double> toy_step(const Scene& scene, const protocol::VisualInput& visual,
                             std::span<const protocol::TokenId> prefix, const ToyConfig& config);

/// In-process ModelSession over the seeded scene stream. Images are
/// addressed as "toy:<index>"; the general instruction selects the
/// general attention pattern, every other instruction the query pattern.
std::unique_ptr<protocol::ModelSession> make_session(const ToyConfig& config);

}  // namespace iava::toy
