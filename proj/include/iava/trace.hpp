// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iava/selection.hpp"

namespace iava::protocol {

inline constexpr int kTraceVersion = 1;

struct CandidateAnswer {
    std::string label;
    double base = 0.0;      // logit under the original image
    double negative = 0.0;  // logit under the negative sample

    bool operator==(const CandidateAnswer&) const = default;
};

/// Offline record of one example: both attention vectors plus
/// candidate-answer logits from the original and negative passes.
struct TraceRecord {
    std::string id;
    std::size_t n_tokens = 0;
    selection::AttentionVector att1{std::vector<double>{0.0}};
    selection::AttentionVector att2{std::vector<double>{0.0}};
    std::vector<CandidateAnswer> candidates;
    std::string gold;

    bool operator==(const TraceRecord&) const = default;
};

/// Throws InvariantViolation naming the record id.
void validate(const TraceRecord& record);

std::string encode_record(const TraceRecord& record);
std::string trace_header();

/// Streams records from a trace file. The first non-empty line must be the
/// version header; a zero-byte file is an empty stream.
class TraceReader {
public:
    explicit TraceReader(const std::string& path);

    /// Next record, or std::nullopt at end of file. Throws ParseError (with
    /// the 1-based line number) or InvariantViolation (with the record id).
    std::optional<TraceRecord> next();

    std::size_t line_number() const noexcept { return m_line; }

private:
    std::ifstream m_in;
    std::size_t m_line = 0;
    bool m_header_seen = false;
};

std::vector<TraceRecord> read_traces(const std::string& path);

void write_traces(std::span<const TraceRecord> records, const std::string& path);

}  // namespace iava::protocol
