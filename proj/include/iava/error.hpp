// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iava {

enum class ErrorKind {
    EmptyVector,
    NonFiniteScore,
    NegativeScore,
    LengthMismatch,
    RankOutOfRange,
    InvalidSelection,
    InvalidConfig,
    NonFiniteLogit,
    DegenerateDistribution,
    ConnectFailure,
    HandshakeMismatch,
    SessionFailure,
    ParseError,
    InvariantViolation,
    EmptyInput,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the engine; `kind()` carries the category so
/// callers (notably the CLI's exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), m_kind(kind) {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

}  // namespace iava
