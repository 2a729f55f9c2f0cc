// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal blocking TCP with deadlines; private to the library.

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace iava::net {

using Clock = std::chrono::steady_clock;

struct Address {
    std::string host;
    std::uint16_t port = 0;
};

/// "host:port"; throws InvalidConfig when malformed.
Address parse_address(std::string_view text);

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : m_fd(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept : m_fd(other.release()) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return m_fd; }
    bool valid() const noexcept { return m_fd >= 0; }
    int release() noexcept {
        const int fd = m_fd;
        m_fd = -1;
        return fd;
    }

private:
    int m_fd = -1;
};

/// Throws ConnectFailure.
Socket connect_to(const Address& address, std::chrono::milliseconds timeout);

enum class ReadStatus { Line, Timeout, Closed };

class LineStream {
public:
    explicit LineStream(Socket socket) : m_socket(std::move(socket)) {}

    /// Reads one '\n'-terminated line (terminator stripped) before `deadline`.
    ReadStatus read_line(std::string& out, Clock::time_point deadline);

    /// Writes `line` plus '\n'. Returns false if the peer is gone.
    bool write_line(std::string_view line);

private:
    Socket m_socket;
    std::string m_buffer;
};

class Listener {
public:
    /// Binds and listens; port 0 picks an ephemeral port. Throws ConnectFailure.
    explicit Listener(const Address& address);

    std::uint16_t port() const noexcept { return m_port; }

    /// Waits up to `timeout` for a client; returns an invalid Socket on timeout.
    Socket accept(std::chrono::milliseconds timeout);

private:
    Socket m_socket;
    std::uint16_t m_port = 0;
};

}  // namespace iava::net
