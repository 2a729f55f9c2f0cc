// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "iava/session.hpp"

namespace iava::protocol {

// Line-delimited JSON messages. Each line is one object with a `type`
// field; requests and replies correlate through `id`.

struct Hello {
    int version = kProtocolVersion;
    SessionInfo info;
};

struct AttentionRequest {
    std::uint64_t id = 0;
    std::string image;
    std::string instruction;
};

struct AttentionResponse {
    std::uint64_t id = 0;
    std::vector<double> scores;
};

struct StepRequest {
    std::uint64_t id = 0;
    std::string image;
    VisualInput visual = OriginalImage{};
    std::string query;
    std::vector<TokenId> prefix;
};

struct StepResponse {
    std::uint64_t id = 0;
    std::vector<double> logits;
};

struct ErrorMessage {
    std::uint64_t id = 0;
    std::string reason;
};

using Message = std::variant<Hello, AttentionRequest, AttentionResponse, StepRequest, StepResponse, ErrorMessage>;

/// Serializes one message as a single line (no trailing newline).
std::string encode(const Message& message);

/// Parses one line. Mask variants need the session token count to rebuild
/// their MaskSpec; pass it when decoding step requests. Throws ParseError.
Message decode(std::string_view line, std::optional<std::size_t> n_tokens = std::nullopt);

void write_visual(nlohmann::ordered_json& out, const VisualInput& visual);
VisualInput read_visual(const nlohmann::json& in, std::optional<std::size_t> n_tokens);

}  // namespace iava::protocol
