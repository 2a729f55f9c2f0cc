// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <variant>

#include "iava/remote.hpp"
#include "iava/session.hpp"
#include "iava/toy_lvlm.hpp"

namespace iava {

struct InProcessToy {
    toy::ToyConfig config;
};

struct ExternalEndpoint {
    std::string address;  // host:port
    std::chrono::milliseconds request_timeout = protocol::kDefaultRequestTimeout;
};

using Endpoint = std::variant<InProcessToy, ExternalEndpoint>;

/// Opens a session and completes the handshake; the session reports its
/// token count and vocabulary through info(). Throws ConnectFailure or
/// HandshakeMismatch for external endpoints.
std::unique_ptr<protocol::ModelSession> open_session(const Endpoint& endpoint);

/// Configures spdlog from IAVA_LOG (off|error|warn|info|debug|trace; unset = off).
void init_logging_from_env();

}  // namespace iava
