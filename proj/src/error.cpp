// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/error.hpp"

namespace iava {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyVector: return "EmptyVector";
        case ErrorKind::NonFiniteScore: return "NonFiniteScore";
        case ErrorKind::NegativeScore: return "NegativeScore";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::RankOutOfRange: return "RankOutOfRange";
        case ErrorKind::InvalidSelection: return "InvalidSelection";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::NonFiniteLogit: return "NonFiniteLogit";
        case ErrorKind::DegenerateDistribution: return "DegenerateDistribution";
        case ErrorKind::ConnectFailure: return "ConnectFailure";
        case ErrorKind::HandshakeMismatch: return "HandshakeMismatch";
        case ErrorKind::SessionFailure: return "SessionFailure";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::EmptyInput: return "EmptyInput";
    }
    return "Unknown";
}

}  // namespace iava
