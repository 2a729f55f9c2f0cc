// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "iava/decoder.hpp"
#include "iava/error.hpp"
#include "iava/selection.hpp"
#include "iava/toy_lvlm.hpp"
#include "oracles.hpp"

namespace {

using namespace iava::decoding;
using iava::Error;
using iava::ErrorKind;
using iava::protocol::OriginalImage;
using iava::protocol::SessionInfo;
using iava::protocol::VisualInput;

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an iava::Error";
    return ErrorKind::InvalidConfig;
}

std::vector<double> probs(const ProbabilityVector& p) { return {p.probs().begin(), p.probs().end()}; }

// Session driven by a callback; counts step calls.
class ScriptedSession : public iava::protocol::ModelSession {
public:
    using StepFn = std::function<std::vector<double>(const VisualInput&, std::span<const TokenId>)>;
    ScriptedSession(std::size_t vocab, StepFn fn) : ModelSession(SessionInfo{4, vocab, {}}), m_fn(std::move(fn)) {}
    int calls = 0;

protected:
    std::vector<double> do_attention(std::string_view, std::string_view) override { return {0.25, 0.25, 0.25, 0.25}; }
    std::vector<double> do_step(std::string_view, const VisualInput& v, std::string_view,
                                std::span<const TokenId> prefix) override {
        ++calls;
        return m_fn(v, prefix);
    }

private:
    StepFn m_fn;
};

TEST(Softmax, StableForLargeLogits) {
    const auto p = softmax(std::vector<double>{1000.0, 1000.0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
    const auto lp = log_softmax(std::vector<double>{-1000.0, 0.0});
    EXPECT_DOUBLE_EQ(lp[1], 0.0);
    EXPECT_DOUBLE_EQ(lp[0], -1000.0);
}

TEST(Contrastive, AlphaZeroIsBaseSoftmax) {
    const StepLogits s({2.0, 1.0, 0.0}, {-5.0, 3.0, 9.0});
    const auto got = probs(contrastive_distribution(s, 0.0));
    const auto want = softmax(std::vector<double>{2.0, 1.0, 0.0});
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
}

TEST(Contrastive, IdenticalPassesGiveBaseSoftmax) {
    const std::vector<double> z{0.3, -1.2, 2.5, 0.0};
    const auto want = softmax(z);
    for (double alpha : {0.5, 1.0, 4.0}) {
        const auto got = probs(contrastive_distribution(StepLogits(z, z), alpha));
        for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
    }
}

TEST(Contrastive, OpposedTwoTokenExample) {
    // 2 log p_b - log p_n reduces to softmax([2, -1]) = [e^3, 1] / (1 + e^3).
    const auto got = probs(contrastive_distribution(StepLogits({1.0, 0.0}, {0.0, 1.0}), 1.0));
    const double e3 = std::exp(3.0);
    EXPECT_NEAR(got[0], e3 / (1.0 + e3), 1e-12);
    EXPECT_NEAR(got[1], 1.0 / (1.0 + e3), 1e-12);
    EXPECT_NEAR(got[0], 0.9525741268224334, 1e-12);
}

TEST(Contrastive, MatchesOracleAndIsValid) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t v = 2 + rng() % 50;
        const auto b = iava::testing::random_logits(rng, v);
        const auto n = iava::testing::random_logits(rng, v);
        const double alpha = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
        const auto got = probs(contrastive_distribution(StepLogits(b, n), alpha));
        const auto want = iava::testing::naive_contrastive(b, n, alpha);
        double total = 0.0;
        for (std::size_t k = 0; k < v; ++k) {
            EXPECT_NEAR(got[k], want[k], 1e-9);
            EXPECT_GE(got[k], 0.0);
            total += got[k];
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Contrastive, ShiftInvariance) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng() % 20;
        auto b = iava::testing::random_logits(rng, v);
        auto n = iava::testing::random_logits(rng, v);
        const auto before = probs(contrastive_distribution(StepLogits(b, n), 1.0));
        const double cb = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
        const double cn = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
        for (auto& x : b) x += cb;
        for (auto& x : n) x += cn;
        const auto after = probs(contrastive_distribution(StepLogits(b, n), 1.0));
        for (std::size_t k = 0; k < v; ++k) EXPECT_NEAR(after[k], before[k], 1e-9);
    }
}

TEST(Contrastive, FavoursTokensTheNegativePassDislikes) {
    // Equal base, negative prefers token 1: the contrast must shift mass to token 0,
    // more so as alpha grows.
    const StepLogits s({0.0, 0.0}, {0.0, 2.0});
    double previous = 0.5;
    for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
        const double p0 = contrastive_distribution(s, alpha)[0];
        EXPECT_GT(p0, previous);
        previous = p0;
    }
}

TEST(Contrastive, RatioNondecreasingInAlpha) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng() % 10;
        const auto b = iava::testing::random_logits(rng, v);
        const auto n = iava::testing::random_logits(rng, v);
        const auto lb = log_softmax(b);
        const auto ln = log_softmax(n);
        std::size_t u = 0, w = 1;
        if (lb[u] - ln[u] < lb[w] - ln[w]) std::swap(u, w);
        double previous = -INFINITY;
        for (double alpha = 0.0; alpha <= 4.0; alpha += 0.25) {
            const auto p = contrastive_distribution(StepLogits(b, n), alpha);
            const double log_ratio = std::log(p[u]) - std::log(p[w]);
            EXPECT_GE(log_ratio, previous - 1e-9);
            previous = log_ratio;
        }
    }
}

TEST(Contrastive, ErrorPaths) {
    EXPECT_EQ(kind_of([] { StepLogits({1.0, 2.0}, {1.0}); }), ErrorKind::LengthMismatch);
    EXPECT_EQ(kind_of([] { StepLogits({1.0}, {1.0}); }), ErrorKind::LengthMismatch);
    EXPECT_EQ(kind_of([] { StepLogits({1.0, NAN}, {1.0, 2.0}); }), ErrorKind::NonFiniteLogit);
    EXPECT_EQ(kind_of([] { contrastive_distribution(StepLogits({1.0, 2.0}, {1.0, 2.0}), -0.1); }),
              ErrorKind::InvalidConfig);
}

TEST(ProbabilityVectorTest, Validation) {
    EXPECT_NO_THROW(ProbabilityVector({0.25, 0.75}));
    EXPECT_EQ(kind_of([] { ProbabilityVector({0.0, 0.0}); }), ErrorKind::DegenerateDistribution);
    EXPECT_EQ(kind_of([] { ProbabilityVector({0.5, 0.6}); }), ErrorKind::DegenerateDistribution);
    EXPECT_EQ(kind_of([] { ProbabilityVector({-0.1, 1.1}); }), ErrorKind::DegenerateDistribution);
    EXPECT_EQ(kind_of([] { ProbabilityVector(std::vector<double>{}); }), ErrorKind::EmptyVector);
}

TEST(PickToken, GreedyArgmaxLowestIndexOnTies) {
    iava::Rng rng(1);
    const DecodeConfig greedy;
    EXPECT_EQ(pick_token(ProbabilityVector({0.1, 0.7, 0.2}), greedy, rng), 1u);
    EXPECT_EQ(pick_token(ProbabilityVector({0.4, 0.2, 0.4}), greedy, rng), 0u);
    EXPECT_EQ(pick_token(ProbabilityVector({0.0, 0.5, 0.5}), greedy, rng), 1u);
}

TEST(PickToken, SamplingFrequencies) {
    DecodeConfig cfg;
    cfg.mode = SamplingMode::Sample;
    iava::Rng rng(42);
    const ProbabilityVector half({0.5, 0.5});
    int zeros = 0;
    for (int k = 0; k < 10000; ++k) zeros += pick_token(half, cfg, rng) == 0;
    EXPECT_GE(zeros, 4800);
    EXPECT_LE(zeros, 5200);

    const ProbabilityVector skewed({0.2, 0.0, 0.8});
    int counts[3] = {0, 0, 0};
    for (int k = 0; k < 10000; ++k) ++counts[pick_token(skewed, cfg, rng)];
    EXPECT_EQ(counts[1], 0);
    EXPECT_NEAR(counts[0] / 10000.0, 0.2, 0.02);
}

TEST(PickToken, LowTemperatureApproachesGreedy) {
    DecodeConfig cfg;
    cfg.mode = SamplingMode::Sample;
    cfg.temperature = 0.01;
    iava::Rng rng(3);
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(pick_token(ProbabilityVector({0.45, 0.55}), cfg, rng), 1u);
}

TEST(PickToken, SeededSamplingIsReproducible) {
    DecodeConfig cfg;
    cfg.mode = SamplingMode::Sample;
    const ProbabilityVector p({0.3, 0.3, 0.4});
    iava::Rng a(99), b(99);
    for (int k = 0; k < 500; ++k) EXPECT_EQ(pick_token(p, cfg, a), pick_token(p, cfg, b));
}

TEST(Plausibility, DropsImplausibleTokens) {
    const ProbabilityVector dist({0.1, 0.2, 0.7});
    const std::vector<double> base{0.0, std::log(0.05), std::log(2.0)};
    // Base probs are proportional to [1, 0.05, 2]; a 0.1 cut keeps tokens 0 and 2.
    const auto filtered = apply_plausibility(dist, base, 0.1);
    EXPECT_DOUBLE_EQ(filtered[1], 0.0);
    EXPECT_NEAR(filtered[0], 0.1 / 0.8, 1e-12);
    EXPECT_NEAR(filtered[2], 0.7 / 0.8, 1e-12);
}

TEST(DecodeConfigTest, Validation) {
    DecodeConfig c;
    EXPECT_NO_THROW(validate(c));
    c.alpha = -1.0;
    EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::InvalidConfig);
    c = {};
    c.temperature = 0.0;
    EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::InvalidConfig);
    c = {};
    c.max_steps = 0;
    EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::InvalidConfig);
    c = {};
    c.min_base_prob = 1.5;
    EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::InvalidConfig);
}

TEST(DecodeSequence, StopsOnStopTokenAndRespectsMaxSteps) {
    ScriptedSession s(3, [](const VisualInput&, std::span<const TokenId> prefix) {
        return prefix.size() < 2 ? std::vector<double>{5.0, 0.0, 0.0} : std::vector<double>{0.0, 0.0, 5.0};
    });
    DecodeConfig cfg;
    cfg.stop_tokens = {2};
    EXPECT_EQ(decode_sequence(s, "img", "q", std::nullopt, cfg), (std::vector<TokenId>{0, 0}));
    cfg.max_steps = 1;
    EXPECT_EQ(decode_sequence(s, "img", "q", std::nullopt, cfg), (std::vector<TokenId>{0}));
    cfg.stop_tokens.clear();
    cfg.max_steps = 4;
    EXPECT_EQ(decode_sequence(s, "img", "q", std::nullopt, cfg).size(), 4u);
}

TEST(DecodeSequence, ContrastFlipsTheAnswer) {
    // Base mildly prefers token 0; the negative pass prefers it strongly, so
    // the contrast picks token 1.
    ScriptedSession s(2, [](const VisualInput& v, std::span<const TokenId>) {
        if (std::holds_alternative<OriginalImage>(v)) return std::vector<double>{1.0, 0.0};
        return std::vector<double>{4.0, 0.0};
    });
    DecodeConfig cfg;
    cfg.max_steps = 1;
    EXPECT_EQ(decode_sequence(s, "img", "q", std::nullopt, cfg), (std::vector<TokenId>{0}));
    EXPECT_EQ(decode_sequence(s, "img", "q", VisualInput{iava::protocol::NoImage{}}, cfg),
              (std::vector<TokenId>{1}));
    cfg.alpha = 0.0;
    EXPECT_EQ(decode_sequence(s, "img", "q", VisualInput{iava::protocol::NoImage{}}, cfg),
              (std::vector<TokenId>{0}));
}

TEST(DecodeSequence, SessionFailureNamesTheStep) {
    ScriptedSession s(2, [](const VisualInput&, std::span<const TokenId> prefix) {
        if (prefix.size() == 1) throw Error(ErrorKind::SessionFailure, "peer went away");
        return std::vector<double>{1.0, 0.0};
    });
    try {
        decode_sequence(s, "img", "q", std::nullopt, DecodeConfig{});
        FAIL() << "expected SessionFailure";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SessionFailure);
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
    }
}

TEST(DecodeSequence, WrongLogitCountIsSessionFailure) {
    ScriptedSession s(3, [](const VisualInput&, std::span<const TokenId>) { return std::vector<double>{1.0, 0.0}; });
    EXPECT_EQ(kind_of([&] { decode_sequence(s, "img", "q", std::nullopt, DecodeConfig{}); }),
              ErrorKind::SessionFailure);
}

TEST(DecodeSequence, CanonicalToySceneAnswersGold) {
    const iava::toy::ToyConfig toy;
    auto session = iava::toy::make_session(toy);
    const auto image = iava::toy::image_id(0);
    const auto att1 = session->attention(image, iava::protocol::kGeneralInstruction);
    const auto att2 = session->attention(image, iava::toy::kToyQuery);
    const auto selection = iava::selection::select_irrelevant(att1, att2, {16, -0.1});
    DecodeConfig cfg;
    cfg.stop_tokens = {static_cast<TokenId>(iava::toy::Vocab::Eos)};
    const auto answer = decode_sequence(*session, image, iava::toy::kToyQuery, selection, cfg);
    ASSERT_EQ(answer.size(), 1u);
    const auto gold = iava::toy::scene_at(toy, 0).gold == iava::toy::Answer::Yes ? iava::toy::Vocab::Yes
                                                                                  : iava::toy::Vocab::No;
    EXPECT_EQ(answer[0], static_cast<TokenId>(gold));
}

TEST(DecodeSequence, ToyAlphaZeroMatchesBaseDecoding) {
    const iava::toy::ToyConfig toy;
    auto session = iava::toy::make_session(toy);
    DecodeConfig cfg;
    cfg.stop_tokens = {static_cast<TokenId>(iava::toy::Vocab::Eos)};
    DecodeConfig zero = cfg;
    zero.alpha = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto image = iava::toy::image_id(k);
        const auto base = decode_sequence(*session, image, iava::toy::kToyQuery, std::nullopt, cfg);
        const auto contrast =
            decode_sequence(*session, image, iava::toy::kToyQuery, VisualInput{iava::protocol::NoImage{}}, zero);
        ASSERT_EQ(base.size(), 1u);
        EXPECT_EQ(base, contrast);
    }
}

TEST(DecodeSequence, SampledToyRunIsDeterministic) {
    auto session = iava::toy::make_session({});
    DecodeConfig cfg;
    cfg.mode = SamplingMode::Sample;
    cfg.max_steps = 3;
    cfg.seed = 7;
    const auto first = decode_sequence(*session, "toy:3", iava::toy::kToyQuery, std::nullopt, cfg);
    const auto second = decode_sequence(*session, "toy:3", iava::toy::kToyQuery, std::nullopt, cfg);
    EXPECT_EQ(first, second);
}

}  // namespace
