// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/endpoint.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace iava {

std::unique_ptr<protocol::ModelSession> open_session(const Endpoint& endpoint) {
    if (const auto* toy_endpoint = std::get_if<InProcessToy>(&endpoint)) {
        return toy::make_session(toy_endpoint->config);
    }
    const auto& external = std::get<ExternalEndpoint>(endpoint);
    return protocol::connect_remote(external.address, external.request_timeout);
}

void init_logging_from_env() {
    auto logger = spdlog::stderr_logger_mt("iava");
    spdlog::set_default_logger(logger);
    const char* level = std::getenv("IAVA_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::off);
}

}  // namespace iava
