// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <optional>
#include <random>
#include <vector>

#include "iava/error.hpp"
#include "iava/evaluation.hpp"
#include "iava/toy_lvlm.hpp"

namespace {

using namespace iava::eval;
using iava::decoding::DecodeConfig;
using iava::selection::SelectionParams;

const iava::toy::ToyConfig kToy{};
const SelectionParams kParams{16, -0.1};

SessionFactory toy_factory() {
    return [] { return iava::toy::make_session(kToy); };
}

DecodeConfig alpha(double a) {
    DecodeConfig c;
    c.alpha = a;
    return c;
}

TEST(PopeMetrics, PerfectPredictor) {
    const std::vector<Label> g{Label::Yes, Label::No, Label::No, Label::Yes};
    const auto r = pope_metrics(g, g);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
}

TEST(PopeMetrics, AllYesOnBalancedGold) {
    const std::vector<Label> p(4, Label::Yes);
    const std::vector<Label> g{Label::Yes, Label::No, Label::Yes, Label::No};
    const auto r = pope_metrics(p, g);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(r.precision, 0.5);
    EXPECT_DOUBLE_EQ(r.recall, 1.0);
    EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);
}

TEST(PopeMetrics, InvertedPredictor) {
    const std::vector<Label> g{Label::Yes, Label::No, Label::No};
    const std::vector<Label> p{Label::No, Label::Yes, Label::Yes};
    const auto r = pope_metrics(p, g);
    EXPECT_EQ(r.accuracy, 0.0);
    EXPECT_EQ(r.tp, 0u);
    EXPECT_EQ(r.f1, 0.0);
}

TEST(PopeMetrics, UndefinedRatiosAreFlagged) {
    const std::vector<Label> p(3, Label::No);
    const std::vector<Label> g(3, Label::No);
    const auto r = pope_metrics(p, g);
    EXPECT_TRUE(r.precision_undefined);
    EXPECT_TRUE(r.recall_undefined);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.accuracy, 1.0);
}

TEST(PopeMetrics, BruteForceConfusionCounts) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 100;
        std::vector<Label> p(n), g(n);
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t k = 0; k < n; ++k) {
            p[k] = rng() % 2 ? Label::Yes : Label::No;
            g[k] = rng() % 2 ? Label::Yes : Label::No;
            if (p[k] == Label::Yes) (g[k] == Label::Yes ? tp : fp)++;
            else (g[k] == Label::Yes ? fn : tn)++;
        }
        const auto r = pope_metrics(p, g);
        EXPECT_EQ(r.tp, tp);
        EXPECT_EQ(r.fp, fp);
        EXPECT_EQ(r.tn, tn);
        EXPECT_EQ(r.fn, fn);
        EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(tp + tn) / n);
    }
}

TEST(PopeMetrics, UnparsedCountsAsWrong) {
    const std::vector<std::optional<Label>> p{std::nullopt, std::nullopt, Label::Yes};
    const std::vector<Label> g{Label::Yes, Label::No, Label::Yes};
    const auto r = pope_metrics(std::span<const std::optional<Label>>(p), g);
    EXPECT_EQ(r.unparsed, 2u);
    EXPECT_EQ(r.fn, 1u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_EQ(r.tp, 1u);
}

TEST(PopeMetrics, ErrorPaths) {
    const std::vector<Label> one{Label::Yes};
    const std::vector<Label> none;
    try {
        pope_metrics(one, none);
        FAIL();
    } catch (const iava::Error& e) {
        EXPECT_EQ(e.kind(), iava::ErrorKind::LengthMismatch);
    }
    try {
        pope_metrics(none, none);
        FAIL();
    } catch (const iava::Error& e) {
        EXPECT_EQ(e.kind(), iava::ErrorKind::EmptyInput);
    }
}

TEST(ParseAnswer, LeadingWord) {
    EXPECT_EQ(parse_answer("yes"), Label::Yes);
    EXPECT_EQ(parse_answer("  Yes, there is a dog."), Label::Yes);
    EXPECT_EQ(parse_answer("NO"), Label::No);
    EXPECT_EQ(parse_answer("no."), Label::No);
    EXPECT_FALSE(parse_answer("nothing"));
    EXPECT_FALSE(parse_answer("yesterday"));
    EXPECT_FALSE(parse_answer("maybe"));
    EXPECT_FALSE(parse_answer(""));
}

TEST(Strategy, ParseAndDescribe) {
    EXPECT_EQ(parse_strategy("none"), StrategyKind::None);
    EXPECT_EQ(parse_strategy("text"), StrategyKind::TextOnly);
    EXPECT_FALSE(parse_strategy("vcd"));
    EXPECT_EQ(describe({}), "iava policy=zero-fill");
}

TEST(RunBenchmark, FrozenToyReferences) {
    const auto examples = toy_examples(kToy, 1000);
    const auto base = run_benchmark(toy_factory(), examples, {StrategyKind::None}, kParams, alpha(1.0));
    EXPECT_EQ(base.tp, 491u);
    EXPECT_EQ(base.fp, 348u);
    EXPECT_EQ(base.tn, 161u);
    EXPECT_EQ(base.fn, 0u);
    EXPECT_DOUBLE_EQ(base.accuracy, 0.652);

    const auto iava = run_benchmark(toy_factory(), examples, {StrategyKind::Iava}, kParams, alpha(1.0));
    EXPECT_EQ(iava.tp, 491u);
    EXPECT_EQ(iava.fp, 72u);
    EXPECT_EQ(iava.tn, 437u);
    EXPECT_EQ(iava.fn, 0u);
    EXPECT_GT(iava.accuracy, base.accuracy);
}

TEST(RunBenchmark, AlphaZeroReproducesBase) {
    const auto examples = toy_examples(kToy, 300);
    const auto base = run_benchmark(toy_factory(), examples, {StrategyKind::None}, kParams, alpha(1.0));
    for (auto kind : {StrategyKind::Iava, StrategyKind::Noise, StrategyKind::TextOnly}) {
        EXPECT_EQ(run_benchmark(toy_factory(), examples, {kind}, kParams, alpha(0.0)), base);
    }
}

TEST(RunBenchmark, WorkerCountDoesNotChangeResults) {
    const auto examples = toy_examples(kToy, 200);
    DecodeConfig sampled;
    sampled.mode = iava::decoding::SamplingMode::Sample;
    const auto one = run_benchmark(toy_factory(), examples, {}, kParams, sampled, {1});
    const auto four = run_benchmark(toy_factory(), examples, {}, kParams, sampled, {4});
    EXPECT_EQ(one, four);
    EXPECT_EQ(report_json("x", one), report_json("x", four));
}

TEST(RunBenchmark, EmptyInput) {
    try {
        run_benchmark(toy_factory(), {}, {}, kParams, {});
        FAIL();
    } catch (const iava::Error& e) {
        EXPECT_EQ(e.kind(), iava::ErrorKind::EmptyInput);
    }
}

TEST(RunBenchmark, SessionFailureNamesTheExample) {
    auto examples = toy_examples(kToy, 5);
    examples[3].image = "missing.png";
    try {
        run_benchmark(toy_factory(), examples, {}, kParams, {});
        FAIL();
    } catch (const iava::Error& e) {
        EXPECT_EQ(e.kind(), iava::ErrorKind::SessionFailure);
        EXPECT_NE(std::string(e.what()).find("example 3"), std::string::npos) << e.what();
    }
}

TEST(Sweep, SinglePointMatchesRunBenchmark) {
    const auto examples = toy_examples(kToy, 300);
    const std::vector<std::size_t> i_values{16};
    const auto points = sweep_i(toy_factory(), examples, i_values, {}, -0.1, {});
    ASSERT_EQ(points.size(), 1u);
    EXPECT_EQ(points[0].i, 16u);
    EXPECT_EQ(points[0].score, run_benchmark(toy_factory(), examples, {}, kParams, {}).accuracy);
}

TEST(Sweep, DuplicatesAreIdentical) {
    const auto examples = toy_examples(kToy, 200);
    const std::vector<std::size_t> i_values{8, 8};
    const auto points = sweep_i(toy_factory(), examples, i_values, {}, -0.1, {});
    ASSERT_EQ(points.size(), 2u);
    EXPECT_EQ(points[0].score, points[1].score);
}

TEST(Sweep, RiseThenFall) {
    const auto examples = toy_examples(kToy, 1000);
    const std::vector<std::size_t> i_values{2, 8, 16, 24, 31};
    const auto points = sweep_i(toy_factory(), examples, i_values, {}, -0.1, {});
    const auto best = std::max_element(points.begin(), points.end(),
                                       [](const SweepPoint& a, const SweepPoint& b) { return a.score < b.score; });
    EXPECT_NE(best, points.begin());
    EXPECT_NE(best, points.end() - 1);
}

TEST(EvaluateTraces, ContrastiveArgmax) {
    using iava::protocol::TraceRecord;
    TraceRecord a;
    a.id = "a";
    a.n_tokens = 1;
    a.candidates = {{"yes", 1.0, 4.0}, {"no", 0.0, 0.0}};
    a.gold = "no";
    TraceRecord b = a;
    b.id = "b";
    b.gold = "yes";
    const std::vector<TraceRecord> records{a, b};
    // alpha 0: base argmax says yes for both.
    const auto plain = evaluate_traces(records, 0.0);
    EXPECT_EQ(plain.tp, 1u);
    EXPECT_EQ(plain.fp, 1u);
    // alpha 1: yes scores 2*1 - 4 < 0, so both flip to no.
    const auto contrast = evaluate_traces(records, 1.0);
    EXPECT_EQ(contrast.tn, 1u);
    EXPECT_EQ(contrast.fn, 1u);
}

TEST(Reports, StableFormatting) {
    EvalResult r;
    r.tp = 1;
    r.tn = 1;
    r.accuracy = 1.0;
    r.precision = 1.0;
    r.recall = 1.0;
    r.f1 = 1.0;
    EXPECT_EQ(report_json("base", r),
              "{\"name\":\"base\",\"n\":2,\"accuracy\":1.0,\"precision\":1.0,\"recall\":1.0,\"f1\":1.0,\"tp\":1,"
              "\"fp\":0,\"tn\":1,\"fn\":0,\"unparsed\":0,\"precision_undefined\":false,\"recall_undefined\":false}\n");
    const std::vector<SweepPoint> pts{{2, 0.5}};
    EXPECT_EQ(sweep_report_json(pts), "{\"i\":2,\"accuracy\":0.5}\n");
    EXPECT_EQ(sweep_table(pts), "    i  accuracy\n    2    0.5000\n");
}

}  // namespace
