// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "iava/error.hpp"
#include "iava/rng.hpp"
#include "json.hpp"

namespace iava::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

EvalResult finish(EvalResult r) {
    r.accuracy = ratio(r.tp + r.tn, r.total());
    r.precision_undefined = (r.tp + r.fp) == 0;
    r.recall_undefined = (r.tp + r.fn) == 0;
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    const double den = r.precision + r.recall;
    r.f1 = den > 0.0 ? 2.0 * r.precision * r.recall / den : 0.0;
    return r;
}

Label from_toy(toy::Answer a) { return a == toy::Answer::Yes ? Label::Yes : Label::No; }

std::optional<Label> answer_of(const protocol::ModelSession& session, std::span<const protocol::TokenId> tokens) {
    if (tokens.empty()) return std::nullopt;
    return parse_answer(session.token_label(tokens.front()));
}

std::optional<Label> run_one(protocol::ModelSession& session, const BenchmarkExample& example,
                             const BenchmarkStrategy& strategy, const selection::SelectionParams& params,
                             decoding::DecodeConfig config) {
    std::optional<protocol::VisualInput> negative_input;
    switch (strategy.kind) {
        case StrategyKind::None: break;
        case StrategyKind::Iava: {
            const auto att1 = session.attention(example.image, protocol::kGeneralInstruction);
            const auto att2 = session.attention(example.image, example.query);
            const auto picked = selection::select_irrelevant(att1, att2, params);
            negative_input = negative::build_mask(picked, strategy.policy);
            break;
        }
        case StrategyKind::Noise: negative_input = protocol::NoiseImage{strategy.noise_sigma}; break;
        case StrategyKind::TextOnly: negative_input = protocol::NoImage{}; break;
    }
    const auto tokens = decoding::decode_sequence(session, example.image, example.query, negative_input, config);
    return answer_of(session, tokens);
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Yes ? "yes" : "no"; }

std::optional<Label> parse_answer(std::string_view reply) {
    std::size_t start = 0;
    while (start < reply.size() && std::isspace(static_cast<unsigned char>(reply[start]))) ++start;
    reply.remove_prefix(start);
    auto starts_with_word = [&](std::string_view word) {
        if (reply.size() < word.size()) return false;
        for (std::size_t k = 0; k < word.size(); ++k) {
            if (std::tolower(static_cast<unsigned char>(reply[k])) != word[k]) return false;
        }
        return reply.size() == word.size() || !std::isalpha(static_cast<unsigned char>(reply[word.size()]));
    };
    if (starts_with_word("yes")) return Label::Yes;
    if (starts_with_word("no")) return Label::No;
    return std::nullopt;
}

EvalResult pope_metrics(std::span<const std::optional<Label>> predictions, std::span<const Label> golds) {
    if (predictions.size() != golds.size()) {
        throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                                   std::to_string(golds.size()) + " gold labels");
    }
    if (golds.empty()) throw Error(ErrorKind::EmptyInput, "no examples to score");
    EvalResult r;
    for (std::size_t k = 0; k < golds.size(); ++k) {
        const bool gold_yes = golds[k] == Label::Yes;
        if (!predictions[k]) {
            ++r.unparsed;
            ++(gold_yes ? r.fn : r.fp);
            continue;
        }
        const bool pred_yes = *predictions[k] == Label::Yes;
        if (pred_yes && gold_yes) ++r.tp;
        else if (pred_yes) ++r.fp;
        else if (gold_yes) ++r.fn;
        else ++r.tn;
    }
    return finish(r);
}

EvalResult pope_metrics(std::span<const Label> predictions, std::span<const Label> golds) {
    std::vector<std::optional<Label>> wrapped(predictions.begin(), predictions.end());
    return pope_metrics(std::span<const std::optional<Label>>(wrapped), golds);
}

std::vector<BenchmarkExample> toy_examples(const toy::ToyConfig& config, std::size_t n) {
    std::vector<BenchmarkExample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back({toy::image_id(k), std::string(toy::kToyQuery), from_toy(toy::scene_at(config, k).gold)});
    }
    return out;
}

std::optional<StrategyKind> parse_strategy(std::string_view text) {
    if (text == "none") return StrategyKind::None;
    if (text == "iava") return StrategyKind::Iava;
    if (text == "noise") return StrategyKind::Noise;
    if (text == "text") return StrategyKind::TextOnly;
    return std::nullopt;
}

std::string describe(const BenchmarkStrategy& strategy) {
    switch (strategy.kind) {
        case StrategyKind::None: return "base";
        case StrategyKind::Iava: return fmt::format("iava policy={}", negative::to_string(strategy.policy));
        case StrategyKind::Noise: return negative::describe_strategy(negative::GaussianNoise{strategy.noise_sigma});
        case StrategyKind::TextOnly: return negative::describe_strategy(negative::TextOnly{});
    }
    return "unknown";
}

EvalResult run_benchmark(const SessionFactory& factory, std::span<const BenchmarkExample> examples,
                         const BenchmarkStrategy& strategy, const selection::SelectionParams& params,
                         const decoding::DecodeConfig& config, const BenchmarkOptions& options) {
    if (examples.empty()) throw Error(ErrorKind::EmptyInput, "benchmark has no examples");
    decoding::validate(config);
    if (strategy.kind == StrategyKind::Noise) negative::validate(negative::GaussianNoise{strategy.noise_sigma});

    std::vector<std::optional<Label>> predictions(examples.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};

    auto worker = [&] {
        try {
            auto session = factory();
            auto example_config = config;
            if (example_config.stop_tokens.empty()) {
                if (const auto eos = session->token_id("eos")) example_config.stop_tokens.push_back(*eos);
            }
            for (std::size_t k = cursor++; k < examples.size() && !failed.load(); k = cursor++) {
                example_config.seed = derive_seed(config.seed, k);
                try {
                    predictions[k] = run_one(*session, examples[k], strategy, params, example_config);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::SessionFailure) throw;
                    throw Error(ErrorKind::SessionFailure, "example " + std::to_string(k) + ": " + e.what());
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            failed.store(true);
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, examples.size());
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Label> golds;
    golds.reserve(examples.size());
    for (const auto& e : examples) golds.push_back(e.gold);
    auto result = pope_metrics(std::span<const std::optional<Label>>(predictions), golds);
    spdlog::debug("benchmark {}: n={} acc={:.4f}", describe(strategy), result.total(), result.accuracy);
    return result;
}

std::vector<SweepPoint> sweep_i(const SessionFactory& factory, std::span<const BenchmarkExample> examples,
                                std::span<const std::size_t> i_values, const BenchmarkStrategy& strategy,
                                double lambda, const decoding::DecodeConfig& config,
                                const BenchmarkOptions& options) {
    if (i_values.empty()) throw Error(ErrorKind::EmptyInput, "sweep needs at least one i value");
    auto iava = strategy;
    iava.kind = StrategyKind::Iava;
    std::vector<SweepPoint> points;
    for (const auto i : i_values) {
        const auto result = run_benchmark(factory, examples, iava, {i, lambda}, config, options);
        points.push_back({i, result.accuracy});
    }
    return points;
}

EvalResult evaluate_traces(std::span<const protocol::TraceRecord> records, double alpha) {
    std::vector<std::optional<Label>> predictions;
    std::vector<Label> golds;
    for (const auto& r : records) {
        protocol::validate(r);
        const auto gold = parse_answer(r.gold);
        if (!gold) throw Error(ErrorKind::InvariantViolation, "record '" + r.id + "': gold is not yes/no");
        golds.push_back(*gold);

        if (r.candidates.size() < 2) {
            predictions.push_back(parse_answer(r.candidates.front().label));
            continue;
        }
        std::vector<double> base, neg;
        for (const auto& c : r.candidates) {
            base.push_back(c.base);
            neg.push_back(c.negative);
        }
        const auto dist = decoding::contrastive_distribution(decoding::StepLogits(base, neg), alpha);
        const auto best = std::max_element(dist.probs().begin(), dist.probs().end()) - dist.probs().begin();
        predictions.push_back(parse_answer(r.candidates[static_cast<std::size_t>(best)].label));
    }
    return pope_metrics(std::span<const std::optional<Label>>(predictions), golds);
}

std::string report_json(std::string_view name, const EvalResult& r) {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["n"] = r.total();
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["tn"] = r.tn;
    j["fn"] = r.fn;
    j["unparsed"] = r.unparsed;
    j["precision_undefined"] = r.precision_undefined;
    j["recall_undefined"] = r.recall_undefined;
    return j.dump() + "\n";
}

std::string sweep_report_json(std::span<const SweepPoint> points) {
    std::string out;
    for (const auto& p : points) {
        nlohmann::ordered_json j;
        j["i"] = p.i;
        j["accuracy"] = p.score;
        out += j.dump() + "\n";
    }
    return out;
}

std::string report_table(std::span<const std::pair<std::string, EvalResult>> rows) {
    std::size_t name_width = 8;
    for (const auto& [name, r] : rows) name_width = std::max(name_width, name.size());
    std::string out = fmt::format("{:<{}}  {:>6}  {:>8}  {:>9}  {:>6}  {:>6}  {:>5}  {:>5}  {:>5}  {:>5}\n", "strategy",
                                  name_width, "n", "accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn");
    for (const auto& [name, r] : rows) {
        out += fmt::format("{:<{}}  {:>6}  {:>8.4f}  {:>9.4f}  {:>6.4f}  {:>6.4f}  {:>5}  {:>5}  {:>5}  {:>5}\n", name,
                           name_width, r.total(), r.accuracy, r.precision, r.recall, r.f1, r.tp, r.fp, r.tn, r.fn);
    }
    return out;
}

std::string sweep_table(std::span<const SweepPoint> points) {
    std::string out = fmt::format("{:>5}  {:>8}\n", "i", "accuracy");
    for (const auto& p : points) out += fmt::format("{:>5}  {:>8.4f}\n", p.i, p.score);
    return out;
}

}  // namespace iava::eval
