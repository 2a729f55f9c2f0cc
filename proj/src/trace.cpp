// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "iava/error.hpp"
#include "json.hpp"

namespace iava::protocol {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void invariant_fail(const std::string& id, const std::string& what) {
    throw Error(ErrorKind::InvariantViolation, "record '" + id + "': " + what);
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void validate(const TraceRecord& r) {
    if (r.att1.size() != r.n_tokens) {
        invariant_fail(r.id, "att1 has " + std::to_string(r.att1.size()) + " scores, n_tokens is " +
                                 std::to_string(r.n_tokens));
    }
    if (r.att2.size() != r.n_tokens) {
        invariant_fail(r.id, "att2 has " + std::to_string(r.att2.size()) + " scores, n_tokens is " +
                                 std::to_string(r.n_tokens));
    }
    if (r.candidates.empty()) invariant_fail(r.id, "no candidate answers");
    for (const auto& c : r.candidates) {
        if (!std::isfinite(c.base) || !std::isfinite(c.negative)) {
            invariant_fail(r.id, "candidate '" + c.label + "' has a non-finite logit");
        }
    }
    const bool gold_known = std::any_of(r.candidates.begin(), r.candidates.end(),
                                        [&](const CandidateAnswer& c) { return c.label == r.gold; });
    if (!gold_known) invariant_fail(r.id, "gold label '" + r.gold + "' is not a candidate");
}

std::string trace_header() {
    ordered_json j;
    j["format"] = "iava-trace";
    j["version"] = kTraceVersion;
    return j.dump();
}

std::string encode_record(const TraceRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["n_tokens"] = r.n_tokens;
    j["att1"] = std::vector<double>(r.att1.scores().begin(), r.att1.scores().end());
    j["att2"] = std::vector<double>(r.att2.scores().begin(), r.att2.scores().end());
    auto& cands = j["candidates"] = ordered_json::array();
    for (const auto& c : r.candidates) {
        ordered_json cj;
        cj["label"] = c.label;
        cj["base"] = c.base;
        cj["negative"] = c.negative;
        cands.push_back(std::move(cj));
    }
    j["gold"] = r.gold;
    return j.dump();
}

TraceReader::TraceReader(const std::string& path) : m_in(path) {
    if (!m_in) throw Error(ErrorKind::ParseError, "cannot open trace file '" + path + "'");
}

std::optional<TraceRecord> TraceReader::next() {
    std::string line;
    while (std::getline(m_in, line)) {
        ++m_line;
        if (blank(line)) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            parse_fail(m_line, e.what());
        }
        if (!j.is_object()) parse_fail(m_line, "expected a JSON object");

        if (!m_header_seen) {
            if (!j.contains("version")) parse_fail(m_line, "missing version header");
            if (!j["version"].is_number_integer() || j["version"].get<int>() != kTraceVersion) {
                parse_fail(m_line, "unsupported trace version " + j["version"].dump());
            }
            m_header_seen = true;
            continue;
        }

        TraceRecord r;
        std::vector<double> att1, att2;
        try {
            r.id = j.at("id").get<std::string>();
            r.n_tokens = j.at("n_tokens").get<std::size_t>();
            att1 = j.at("att1").get<std::vector<double>>();
            att2 = j.at("att2").get<std::vector<double>>();
            for (const auto& c : j.at("candidates")) {
                r.candidates.push_back(
                    {c.at("label").get<std::string>(), c.at("base").get<double>(), c.at("negative").get<double>()});
            }
            r.gold = j.at("gold").get<std::string>();
        } catch (const json::exception& e) {
            parse_fail(m_line, e.what());
        }
        try {
            r.att1 = selection::AttentionVector(std::move(att1));
            r.att2 = selection::AttentionVector(std::move(att2));
        } catch (const Error& e) {
            invariant_fail(r.id, e.what());
        }
        validate(r);
        return r;
    }
    return std::nullopt;
}

std::vector<TraceRecord> read_traces(const std::string& path) {
    TraceReader reader(path);
    std::vector<TraceRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

void write_traces(std::span<const TraceRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write trace file '" + path + "'");
    out << trace_header() << '\n';
    for (const auto& r : records) {
        validate(r);
        out << encode_record(r) << '\n';
    }
    if (!out) throw Error(ErrorKind::ParseError, "write to '" + path + "' failed");
}

}  // namespace iava::protocol
