// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "iava/session.hpp"

namespace iava::protocol {

inline constexpr std::chrono::milliseconds kDefaultRequestTimeout{120'000};

/// Client side of the wire protocol. The constructor connects and completes
/// the handshake (ConnectFailure / HandshakeMismatch); each request must be
/// answered before `request_timeout` or it fails with SessionFailure.
std::unique_ptr<ModelSession> connect_remote(std::string_view address,
                                             std::chrono::milliseconds request_timeout = kDefaultRequestTimeout);

using BackendFactory = std::function<std::unique_ptr<ModelSession>()>;

/// Serves any in-process ModelSession over the wire protocol, one backend
/// session per client connection.
class Server {
public:
    /// Binds immediately so `port()` is valid (use port 0 for ephemeral).
    Server(BackendFactory factory, std::string_view address);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const noexcept;

    /// Blocks accepting clients until stop() is called.
    void serve();

    /// Starts serve() on a background thread.
    void start();

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
};

}  // namespace iava::protocol
