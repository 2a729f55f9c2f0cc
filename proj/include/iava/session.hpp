// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iava/negative_sample.hpp"
#include "iava/selection.hpp"

namespace iava::protocol {

inline constexpr int kProtocolVersion = 1;

/// Open-ended instruction used to elicit the prior-driven attention att1.
inline constexpr std::string_view kGeneralInstruction = "Describe the content of the image.";

using TokenId = std::uint32_t;

struct OriginalImage {
    bool operator==(const OriginalImage&) const = default;
};
struct NoiseImage {
    double sigma = 1.0;
    bool operator==(const NoiseImage&) const = default;
};
struct NoImage {
    bool operator==(const NoImage&) const = default;
};

/// Visual input variant for one forward pass; the model side realizes it.
using VisualInput = std::variant<OriginalImage, negative::MaskSpec, NoiseImage, NoImage>;

VisualInput to_visual(const negative::NegativeStrategy& strategy);

struct SessionInfo {
    std::size_t n_tokens = 0;
    std::size_t vocab_size = 0;
    std::vector<std::string> vocab;  // optional token labels; empty or vocab_size long

    bool operator==(const SessionInfo&) const = default;
};

/// Engine-side handle on a model. Public calls validate every reply against
/// the handshake dimensions before returning it; implementations provide
/// the raw `do_*` hooks. One request in flight at a time per session.
class ModelSession {
public:
    virtual ~ModelSession() = default;
    ModelSession(const ModelSession&) = delete;
    ModelSession& operator=(const ModelSession&) = delete;

    const SessionInfo& info() const noexcept { return m_info; }
    std::optional<TokenId> token_id(std::string_view label) const;
    std::string token_label(TokenId id) const;

    selection::AttentionVector attention(std::string_view image, std::string_view instruction);

    std::vector<double> step(std::string_view image, const VisualInput& visual, std::string_view query,
                             std::span<const TokenId> prefix);

protected:
    explicit ModelSession(SessionInfo info);

    virtual std::vector<double> do_attention(std::string_view image, std::string_view instruction) = 0;
    virtual std::vector<double> do_step(std::string_view image, const VisualInput& visual, std::string_view query,
                                        std::span<const TokenId> prefix) = 0;

private:
    SessionInfo m_info;
};

}  // namespace iava::protocol
