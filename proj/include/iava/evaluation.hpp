// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iava/decoder.hpp"
#include "iava/negative_sample.hpp"
#include "iava/selection.hpp"
#include "iava/session.hpp"
#include "iava/toy_lvlm.hpp"
#include "iava/trace.hpp"

namespace iava::eval {

enum class Label { Yes, No };

std::string_view to_string(Label label);

/// Case-insensitive leading "yes"/"no" (followed by a non-letter or end).
std::optional<Label> parse_answer(std::string_view reply);

/// Confusion-matrix metrics with "yes" as the positive class.
struct EvalResult {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t unparsed = 0;  // replies that were neither yes nor no (scored wrong)
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  // tp + fp == 0, precision reported as 0
    bool recall_undefined = false;     // tp + fn == 0, recall reported as 0

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const EvalResult&) const = default;
};

/// Throws LengthMismatch or EmptyInput.
EvalResult pope_metrics(std::span<const Label> predictions, std::span<const Label> golds);

/// Same, over optional predictions: std::nullopt counts as the wrong label.
EvalResult pope_metrics(std::span<const std::optional<Label>> predictions, std::span<const Label> golds);

struct BenchmarkExample {
    std::string image;
    std::string query;
    Label gold = Label::No;
};

/// Scenes 0..n-1 of the toy's seeded stream with their gold labels.
std::vector<BenchmarkExample> toy_examples(const toy::ToyConfig& config, std::size_t n);

enum class StrategyKind { None, Iava, Noise, TextOnly };

std::optional<StrategyKind> parse_strategy(std::string_view text);  // none|iava|noise|text

struct BenchmarkStrategy {
    StrategyKind kind = StrategyKind::Iava;
    negative::MaskPolicy policy = negative::MaskPolicy::ZeroFill;
    double noise_sigma = 1.0;
};

std::string describe(const BenchmarkStrategy& strategy);

using SessionFactory = std::function<std::unique_ptr<protocol::ModelSession>()>;

struct BenchmarkOptions {
    /// Examples are spread over this many sessions, one per worker thread.
    std::size_t workers = 1;
};

/// Decodes one answer per example and scores it. For the IAVA strategy both
/// attention vectors are requested, tokens are selected once, and the
/// negative pass sees the mask. Example k decodes with a seed derived from
/// (config.seed, k), so results do not depend on the worker count.
EvalResult run_benchmark(const SessionFactory& factory, std::span<const BenchmarkExample> examples,
                         const BenchmarkStrategy& strategy, const selection::SelectionParams& params,
                         const decoding::DecodeConfig& config, const BenchmarkOptions& options = {});

struct SweepPoint {
    std::size_t i = 0;
    double score = 0.0;  // accuracy
};

/// One IAVA benchmark run per rank cutoff, everything else fixed.
std::vector<SweepPoint> sweep_i(const SessionFactory& factory, std::span<const BenchmarkExample> examples,
                                std::span<const std::size_t> i_values, const BenchmarkStrategy& strategy,
                                double lambda, const decoding::DecodeConfig& config,
                                const BenchmarkOptions& options = {});

/// Offline scoring of trace records: the contrastive rule is applied to the
/// candidate-logit slice and the argmax label is compared with gold.
EvalResult evaluate_traces(std::span<const protocol::TraceRecord> records, double alpha);

/// One-line JSON report with a fixed key order.
std::string report_json(std::string_view name, const EvalResult& result);
std::string sweep_report_json(std::span<const SweepPoint> points);

/// Aligned-column table, newline-terminated.
std::string report_table(std::span<const std::pair<std::string, EvalResult>> rows);
std::string sweep_table(std::span<const SweepPoint> points);

}  // namespace iava::eval
