// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point.
//
// Exit codes: 0 success, 2 parse error, 3 invariant violation, 4 usage,
// 5 connection/session failure, 1 anything else.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "iava/decoder.hpp"
#include "iava/endpoint.hpp"
#include "iava/error.hpp"
#include "iava/evaluation.hpp"
#include "iava/remote.hpp"
#include "iava/selection.hpp"
#include "iava/toy_lvlm.hpp"
#include "iava/trace.hpp"
#include "json.hpp"

namespace {

using namespace iava;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitParse = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitUsage = 4;
constexpr int kExitConnection = 5;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ParseError: return kExitParse;
        case ErrorKind::InvariantViolation: return kExitInvariant;
        case ErrorKind::InvalidConfig:
        case ErrorKind::RankOutOfRange:
        case ErrorKind::EmptyInput: return kExitUsage;
        case ErrorKind::ConnectFailure:
        case ErrorKind::HandshakeMismatch:
        case ErrorKind::SessionFailure: return kExitConnection;
        default: return kExitInternal;
    }
}

// Flags shared by the commands that decode against a model.
struct DecodeFlags {
    double alpha = 1.0;
    std::optional<std::size_t> i;
    std::optional<double> lambda;
    std::string strategy = "iava";
    std::string policy = "zero-fill";
    double sigma = 1.0;
    std::string mode = "greedy";
    double temperature = 1.0;
    std::size_t max_steps = 8;
    std::uint64_t seed = 42;

    void attach(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "Contrastive strength")->capture_default_str();
        cmd->add_option("--i", i, "Rank cutoff into the ascending attention-change order");
        cmd->add_option("--lambda", lambda, "Standard-deviation multiplier on the att1 threshold");
        cmd->add_option("--strategy", strategy, "Negative sample: iava|noise|text|none")->capture_default_str();
        cmd->add_option("--policy", policy, "Mask policy: zero-fill|mask-token|drop")->capture_default_str();
        cmd->add_option("--sigma", sigma, "Noise standard deviation for --strategy noise")->capture_default_str();
        cmd->add_option("--mode", mode, "greedy|sample")->capture_default_str();
        cmd->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
        cmd->add_option("--max-steps", max_steps, "Maximum generated tokens")->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    }

    eval::BenchmarkStrategy benchmark_strategy() const {
        const auto kind = eval::parse_strategy(strategy);
        if (!kind) throw UsageError("unknown --strategy '" + strategy + "'");
        const auto mask_policy = negative::parse_mask_policy(policy);
        if (!mask_policy) throw UsageError("unknown --policy '" + policy + "'");
        if (*kind == eval::StrategyKind::Noise && !(sigma > 0.0)) throw UsageError("--sigma must be > 0");
        return {*kind, *mask_policy, sigma};
    }

    decoding::DecodeConfig decode_config() const {
        decoding::DecodeConfig config;
        config.alpha = alpha;
        if (mode == "greedy") {
            config.mode = decoding::SamplingMode::Greedy;
        } else if (mode == "sample") {
            config.mode = decoding::SamplingMode::Sample;
        } else {
            throw UsageError("unknown --mode '" + mode + "'");
        }
        config.temperature = temperature;
        config.max_steps = max_steps;
        config.seed = seed;
        try {
            decoding::validate(config);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        return config;
    }

    selection::SelectionParams params_for(std::size_t n_tokens) const {
        selection::SelectionParams params;
        if (const auto defaults = selection::default_params_for(n_tokens)) params = *defaults;
        else if (!i || !lambda) {
            throw UsageError(fmt::format("no default --i/--lambda for {} image tokens; pass both", n_tokens));
        }
        if (i) params.rank = *i;
        if (lambda) params.lambda = *lambda;
        if (params.rank >= n_tokens) {
            throw UsageError(fmt::format("--i {} is beyond the {} image tokens", params.rank, n_tokens));
        }
        return params;
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << content;
}

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) throw UsageError("empty entry in --i-values");
        const auto last = item.find_last_not_of(" \t");
        const std::string_view trimmed(item.data() + first, last - first + 1);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
        if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
            throw UsageError("bad --i-values entry '" + std::string(trimmed) + "'");
        }
        values.push_back(v);
    }
    if (values.empty()) throw UsageError("--i-values must list at least one value");
    return values;
}

// --- select -----------------------------------------------------------------

struct SelectCmd {
    std::string trace;
    std::optional<std::size_t> i;
    std::optional<double> lambda;
    std::string report;

    int run() const {
        const auto records = protocol::read_traces(trace);
        DecodeFlags flags;
        flags.i = i;
        flags.lambda = lambda;
        std::string out;
        for (const auto& r : records) {
            const auto params = flags.params_for(r.n_tokens);
            const auto picked = selection::select_irrelevant(r.att1, r.att2, params);
            nlohmann::ordered_json j;
            j["id"] = r.id;
            j["n_tokens"] = r.n_tokens;
            j["i"] = params.rank;
            j["lambda"] = params.lambda;
            j["selected"] = std::vector<std::size_t>(picked.indices().begin(), picked.indices().end());
            out += j.dump() + "\n";
        }
        if (report.empty()) std::cout << out;
        else write_file(report, out);
        return kExitOk;
    }
};

// --- simulate / sweep ---------------------------------------------------------

struct ToyFlags {
    std::size_t n = 1000;
    std::size_t tokens = 32;
    std::size_t workers = 1;
    std::string endpoint;

    void attach(CLI::App* cmd, bool with_endpoint) {
        cmd->add_option("--n", n, "Number of toy scenes")->capture_default_str();
        cmd->add_option("--tokens", tokens, "Image tokens per toy scene")->capture_default_str();
        cmd->add_option("--workers", workers, "Parallel sessions")->capture_default_str();
        if (with_endpoint) {
            cmd->add_option("--endpoint", endpoint, "Drive a served toy at host:port instead of in-process");
        }
    }

    toy::ToyConfig toy_config(std::uint64_t seed) const {
        toy::ToyConfig config;
        config.n_tokens = tokens;
        config.seed = seed;
        try {
            toy::validate(config);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        return config;
    }

    eval::SessionFactory factory(const toy::ToyConfig& config) const {
        if (endpoint.empty()) return [config] { return open_session(InProcessToy{config}); };
        return [address = endpoint] { return open_session(ExternalEndpoint{address}); };
    }
};

struct SimulateCmd {
    DecodeFlags decode;
    ToyFlags toy;
    std::string report;

    int run() const {
        if (toy.n == 0) throw UsageError("--n must be >= 1");
        const auto strategy = decode.benchmark_strategy();
        const auto config = decode.decode_config();
        const auto toy_config = toy.toy_config(decode.seed);
        const auto params = decode.params_for(toy_config.n_tokens);
        const auto examples = eval::toy_examples(toy_config, toy.n);

        const auto result =
            eval::run_benchmark(toy.factory(toy_config), examples, strategy, params, config, {toy.workers});
        const std::string name = eval::describe(strategy);
        const std::vector<std::pair<std::string, eval::EvalResult>> rows{{name, result}};
        std::cout << eval::report_table(rows);
        if (!report.empty()) write_file(report, eval::report_json(name, result));
        return kExitOk;
    }
};

struct SweepCmd {
    DecodeFlags decode;
    ToyFlags toy;
    std::string i_values;
    std::string report;

    int run() const {
        const auto values = parse_list(i_values);
        if (toy.n == 0) throw UsageError("--n must be >= 1");
        auto strategy = decode.benchmark_strategy();
        const auto config = decode.decode_config();
        const auto toy_config = toy.toy_config(decode.seed);
        const auto base_params = decode.params_for(toy_config.n_tokens);
        for (auto v : values) {
            if (v >= toy_config.n_tokens) throw UsageError(fmt::format("i={} is beyond {} tokens", v, toy_config.n_tokens));
        }
        const auto examples = eval::toy_examples(toy_config, toy.n);
        const auto points = eval::sweep_i(toy.factory(toy_config), examples, values, strategy, base_params.lambda,
                                          config, {toy.workers});
        std::cout << eval::sweep_table(points);
        if (!report.empty()) write_file(report, eval::sweep_report_json(points));
        return kExitOk;
    }
};

// --- eval -----------------------------------------------------------------------

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

struct EvalCmd {
    std::string pred;
    std::string gold;
    std::string report;

    int run() const {
        const auto pred_lines = read_lines(pred);
        const auto gold_lines = read_lines(gold);
        std::vector<eval::Label> golds;
        for (std::size_t k = 0; k < gold_lines.size(); ++k) {
            const auto label = eval::parse_answer(gold_lines[k]);
            if (!label) {
                throw Error(ErrorKind::ParseError,
                            fmt::format("{} line {}: gold label must be yes or no", gold, k + 1));
            }
            golds.push_back(*label);
        }
        if (pred_lines.size() != golds.size()) {
            throw Error(ErrorKind::InvariantViolation,
                        fmt::format("{} predictions for {} gold labels", pred_lines.size(), golds.size()));
        }
        if (golds.empty()) throw Error(ErrorKind::EmptyInput, "no examples to score");
        std::vector<std::optional<eval::Label>> predictions;
        for (const auto& line : pred_lines) predictions.push_back(eval::parse_answer(line));
        const auto result = eval::pope_metrics(std::span<const std::optional<eval::Label>>(predictions), golds);
        const std::vector<std::pair<std::string, eval::EvalResult>> rows{{"eval", result}};
        std::cout << eval::report_table(rows);
        if (result.unparsed > 0) std::cout << "unparsed replies: " << result.unparsed << "\n";
        if (!report.empty()) write_file(report, eval::report_json("eval", result));
        return kExitOk;
    }
};

// --- serve-toy / decode -----------------------------------------------------------

struct ServeCmd {
    std::string addr = "127.0.0.1:7070";
    std::size_t tokens = 32;
    std::uint64_t seed = 42;

    int run() const {
        toy::ToyConfig config;
        config.n_tokens = tokens;
        config.seed = seed;
        try {
            toy::validate(config);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        protocol::Server server([config] { return toy::make_session(config); }, addr);
        const auto colon = addr.rfind(':');
        std::cout << "listening on " << addr.substr(0, colon) << ":" << server.port() << std::endl;
        server.serve();
        return kExitOk;
    }
};

struct DecodeCmd {
    DecodeFlags decode;
    std::string endpoint;
    std::string query = std::string(toy::kToyQuery);
    std::string image = "toy:0";
    long timeout_ms = protocol::kDefaultRequestTimeout.count();

    int run() const {
        if (timeout_ms <= 0) throw UsageError("--timeout-ms must be > 0");
        const auto strategy = decode.benchmark_strategy();
        auto config = decode.decode_config();
        auto session = open_session(ExternalEndpoint{endpoint, std::chrono::milliseconds(timeout_ms)});
        const auto params = decode.params_for(session->info().n_tokens);
        if (const auto eos = session->token_id("eos")) config.stop_tokens.push_back(*eos);

        std::optional<protocol::VisualInput> negative_input;
        switch (strategy.kind) {
            case eval::StrategyKind::None: break;
            case eval::StrategyKind::Iava: {
                const auto att1 = session->attention(image, protocol::kGeneralInstruction);
                const auto att2 = session->attention(image, query);
                negative_input = negative::build_mask(selection::select_irrelevant(att1, att2, params), strategy.policy);
                break;
            }
            case eval::StrategyKind::Noise: negative_input = protocol::NoiseImage{strategy.noise_sigma}; break;
            case eval::StrategyKind::TextOnly: negative_input = protocol::NoImage{}; break;
        }
        const auto tokens = decoding::decode_sequence(*session, image, query, negative_input, config);
        std::string line;
        for (const auto t : tokens) {
            if (!line.empty()) line += ' ';
            line += session->token_label(t);
        }
        std::cout << line << "\n";
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    init_logging_from_env();

    CLI::App app{"Instruction-aligned visual attention: token selection and contrastive decoding"};
    app.require_subcommand(1);

    SelectCmd select_cmd;
    auto* select = app.add_subcommand("select", "Select irrelevant image tokens for every trace record");
    select->add_option("--trace", select_cmd.trace, "Trace file")->required();
    select->add_option("--i", select_cmd.i, "Rank cutoff");
    select->add_option("--lambda", select_cmd.lambda, "Standard-deviation multiplier");
    select->add_option("--report", select_cmd.report, "Write selections here instead of stdout");

    SimulateCmd simulate_cmd;
    auto* simulate = app.add_subcommand("simulate", "Run the toy benchmark for one strategy");
    simulate_cmd.decode.attach(simulate);
    simulate_cmd.toy.attach(simulate, true);
    simulate->add_option("--report", simulate_cmd.report, "Structured report file");

    SweepCmd sweep_cmd;
    auto* sweep = app.add_subcommand("sweep", "Accuracy of the toy benchmark against the rank cutoff i");
    sweep->add_option("--i-values", sweep_cmd.i_values, "Comma-separated rank cutoffs")->required();
    sweep_cmd.decode.attach(sweep);
    sweep_cmd.toy.attach(sweep, true);
    sweep->add_option("--report", sweep_cmd.report, "Structured report file");

    EvalCmd eval_cmd;
    auto* evaluate = app.add_subcommand("eval", "Score yes/no predictions against gold labels");
    evaluate->add_option("--pred", eval_cmd.pred, "One reply per line")->required();
    evaluate->add_option("--gold", eval_cmd.gold, "One yes/no label per line")->required();
    evaluate->add_option("--report", eval_cmd.report, "Structured report file");

    ServeCmd serve_cmd;
    auto* serve = app.add_subcommand("serve-toy", "Serve the toy model over the wire protocol");
    serve->add_option("--addr", serve_cmd.addr, "host:port (port 0 picks a free port)")->capture_default_str();
    serve->add_option("--tokens", serve_cmd.tokens, "Image tokens per scene")->capture_default_str();
    serve->add_option("--seed", serve_cmd.seed, "Scene stream seed")->capture_default_str();

    DecodeCmd decode_cmd;
    auto* decode = app.add_subcommand("decode", "Decode one answer from a served model");
    decode->add_option("--endpoint", decode_cmd.endpoint, "host:port")->required();
    decode->add_option("--query", decode_cmd.query, "Question text")->capture_default_str();
    decode->add_option("--image", decode_cmd.image, "Image identifier understood by the model")->capture_default_str();
    decode->add_option("--timeout-ms", decode_cmd.timeout_ms, "Per-request deadline")->capture_default_str();
    decode_cmd.decode.attach(decode);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*select) return select_cmd.run();
        if (*simulate) return simulate_cmd.run();
        if (*sweep) return sweep_cmd.run();
        if (*evaluate) return eval_cmd.run();
        if (*serve) return serve_cmd.run();
        if (*decode) return decode_cmd.run();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
