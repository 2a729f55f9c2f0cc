// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/wire.hpp"

#include "iava/error.hpp"

namespace iava::protocol {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& obj, const char* key) {
    if (!obj.contains(key)) throw Error(ErrorKind::ParseError, std::string("missing field '") + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::ParseError, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

void write_visual(ordered_json& out, const VisualInput& visual) {
    struct Visitor {
        ordered_json& out;
        void operator()(const OriginalImage&) const { out["visual"] = "original"; }
        void operator()(const negative::MaskSpec& mask) const {
            out["visual"] = "mask";
            out["keep"] = std::vector<std::size_t>(mask.keep().begin(), mask.keep().end());
            out["policy"] = std::string(negative::to_string(mask.policy()));
        }
        void operator()(const NoiseImage& noise) const {
            out["visual"] = "noise";
            out["sigma"] = noise.sigma;
        }
        void operator()(const NoImage&) const { out["visual"] = "none"; }
    };
    std::visit(Visitor{out}, visual);
}

VisualInput read_visual(const json& in, std::optional<std::size_t> n_tokens) {
    const auto kind = field<std::string>(in, "visual");
    if (kind == "original") return OriginalImage{};
    if (kind == "none") return NoImage{};
    if (kind == "noise") return NoiseImage{field<double>(in, "sigma")};
    if (kind == "mask") {
        if (!n_tokens) throw Error(ErrorKind::ParseError, "mask variant decoded without a token count");
        const auto policy_text = field<std::string>(in, "policy");
        const auto policy = negative::parse_mask_policy(policy_text);
        if (!policy) throw Error(ErrorKind::ParseError, "unknown mask policy '" + policy_text + "'");
        auto keep = field<std::vector<std::size_t>>(in, "keep");
        try {
            return negative::MaskSpec(std::move(keep), *n_tokens, *policy);
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError, e.what());
        }
    }
    throw Error(ErrorKind::ParseError, "unknown visual variant '" + kind + "'");
}

std::string encode(const Message& message) {
    struct Visitor {
        ordered_json operator()(const Hello& m) const {
            ordered_json j;
            j["type"] = "hello";
            j["version"] = m.version;
            j["n_tokens"] = m.info.n_tokens;
            j["vocab_size"] = m.info.vocab_size;
            if (!m.info.vocab.empty()) j["vocab"] = m.info.vocab;
            return j;
        }
        ordered_json operator()(const AttentionRequest& m) const {
            ordered_json j;
            j["type"] = "attention_req";
            j["id"] = m.id;
            j["image"] = m.image;
            j["instruction"] = m.instruction;
            return j;
        }
        ordered_json operator()(const AttentionResponse& m) const {
            ordered_json j;
            j["type"] = "attention_resp";
            j["id"] = m.id;
            j["scores"] = m.scores;
            return j;
        }
        ordered_json operator()(const StepRequest& m) const {
            ordered_json j;
            j["type"] = "step_req";
            j["id"] = m.id;
            j["image"] = m.image;
            write_visual(j, m.visual);
            j["query"] = m.query;
            j["prefix"] = m.prefix;
            return j;
        }
        ordered_json operator()(const StepResponse& m) const {
            ordered_json j;
            j["type"] = "step_resp";
            j["id"] = m.id;
            j["logits"] = m.logits;
            return j;
        }
        ordered_json operator()(const ErrorMessage& m) const {
            ordered_json j;
            j["type"] = "error";
            j["id"] = m.id;
            j["reason"] = m.reason;
            return j;
        }
    };
    return std::visit(Visitor{}, message).dump();
}

Message decode(std::string_view line, std::optional<std::size_t> n_tokens) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ParseError, "message is not an object");
    const auto type = field<std::string>(j, "type");

    if (type == "hello") {
        Hello m;
        m.version = field<int>(j, "version");
        m.info.n_tokens = field<std::size_t>(j, "n_tokens");
        m.info.vocab_size = field<std::size_t>(j, "vocab_size");
        if (j.contains("vocab")) m.info.vocab = field<std::vector<std::string>>(j, "vocab");
        return m;
    }
    if (type == "attention_req") {
        return AttentionRequest{field<std::uint64_t>(j, "id"), field<std::string>(j, "image"),
                                field<std::string>(j, "instruction")};
    }
    if (type == "attention_resp") {
        return AttentionResponse{field<std::uint64_t>(j, "id"), field<std::vector<double>>(j, "scores")};
    }
    if (type == "step_req") {
        StepRequest m;
        m.id = field<std::uint64_t>(j, "id");
        m.image = field<std::string>(j, "image");
        m.visual = read_visual(j, n_tokens);
        m.query = field<std::string>(j, "query");
        m.prefix = field<std::vector<TokenId>>(j, "prefix");
        return m;
    }
    if (type == "step_resp") {
        return StepResponse{field<std::uint64_t>(j, "id"), field<std::vector<double>>(j, "logits")};
    }
    if (type == "error") {
        return ErrorMessage{j.contains("id") ? field<std::uint64_t>(j, "id") : 0, field<std::string>(j, "reason")};
    }
    throw Error(ErrorKind::ParseError, "unknown message type '" + type + "'");
}

}  // namespace iava::protocol
