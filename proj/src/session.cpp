// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/session.hpp"

#include <cmath>

#include "iava/error.hpp"

namespace iava::protocol {

VisualInput to_visual(const negative::NegativeStrategy& strategy) {
    struct Visitor {
        VisualInput operator()(const negative::IavaMask& s) const { return s.mask; }
        VisualInput operator()(const negative::GaussianNoise& s) const { return NoiseImage{s.sigma}; }
        VisualInput operator()(const negative::TextOnly&) const { return NoImage{}; }
    };
    return std::visit(Visitor{}, strategy);
}

ModelSession::ModelSession(SessionInfo info) : m_info(std::move(info)) {
    if (m_info.n_tokens == 0 || m_info.vocab_size < 2) {
        throw Error(ErrorKind::HandshakeMismatch, "session needs at least one image token and two vocabulary entries");
    }
    if (!m_info.vocab.empty() && m_info.vocab.size() != m_info.vocab_size) {
        throw Error(ErrorKind::HandshakeMismatch, "vocabulary label count differs from vocab_size");
    }
}

std::optional<TokenId> ModelSession::token_id(std::string_view label) const {
    for (std::size_t k = 0; k < m_info.vocab.size(); ++k) {
        if (m_info.vocab[k] == label) return static_cast<TokenId>(k);
    }
    return std::nullopt;
}

std::string ModelSession::token_label(TokenId id) const {
    if (id < m_info.vocab.size()) return m_info.vocab[id];
    return "<" + std::to_string(id) + ">";
}

selection::AttentionVector ModelSession::attention(std::string_view image, std::string_view instruction) {
    auto scores = do_attention(image, instruction);
    if (scores.size() != m_info.n_tokens) {
        throw Error(ErrorKind::SessionFailure, "attention reply has " + std::to_string(scores.size()) +
                                                   " scores, handshake declared " + std::to_string(m_info.n_tokens));
    }
    try {
        return selection::AttentionVector(std::move(scores));
    } catch (const Error& e) {
        throw Error(ErrorKind::SessionFailure, std::string("invalid attention reply: ") + e.what());
    }
}

std::vector<double> ModelSession::step(std::string_view image, const VisualInput& visual, std::string_view query,
                                       std::span<const TokenId> prefix) {
    if (const auto* mask = std::get_if<negative::MaskSpec>(&visual); mask && mask->total_tokens() != m_info.n_tokens) {
        throw Error(ErrorKind::InvalidSelection, "mask covers " + std::to_string(mask->total_tokens()) +
                                                     " tokens, session has " + std::to_string(m_info.n_tokens));
    }
    auto logits = do_step(image, visual, query, prefix);
    if (logits.size() != m_info.vocab_size) {
        throw Error(ErrorKind::SessionFailure, "step reply has " + std::to_string(logits.size()) +
                                                   " logits, handshake declared " + std::to_string(m_info.vocab_size));
    }
    for (double x : logits) {
        if (!std::isfinite(x)) throw Error(ErrorKind::SessionFailure, "step reply contains a non-finite logit");
    }
    return logits;
}

}  // namespace iava::protocol
