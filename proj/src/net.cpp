// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>

#include "iava/error.hpp"

namespace iava::net {

namespace {

int millis_until(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void set_nonblocking(int fd, bool on) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

struct AddrInfo {
    addrinfo* head = nullptr;
    ~AddrInfo() {
        if (head) ::freeaddrinfo(head);
    }
};

AddrInfo resolve(const Address& address, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    AddrInfo info;
    const auto port = std::to_string(address.port);
    const char* host = address.host.empty() ? nullptr : address.host.c_str();
    if (const int rc = ::getaddrinfo(host, port.c_str(), &hints, &info.head); rc != 0) {
        throw Error(ErrorKind::ConnectFailure, "cannot resolve " + address.host + ": " + ::gai_strerror(rc));
    }
    return info;
}

}  // namespace

Address parse_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorKind::InvalidConfig, "address '" + std::string(text) + "' is not host:port");
    }
    Address out;
    out.host = std::string(text.substr(0, colon));
    const auto port_text = text.substr(colon + 1);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535 || port_text.empty()) {
        throw Error(ErrorKind::InvalidConfig, "bad port in address '" + std::string(text) + "'");
    }
    out.port = static_cast<std::uint16_t>(value);
    return out;
}

Socket::~Socket() {
    if (m_fd >= 0) ::close(m_fd);
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        if (m_fd >= 0) ::close(m_fd);
        m_fd = other.release();
    }
    return *this;
}

Socket connect_to(const Address& address, std::chrono::milliseconds timeout) {
    const auto info = resolve(address, false);
    const auto deadline = Clock::now() + timeout;
    std::string last_error = "no addresses";
    for (addrinfo* ai = info.head; ai != nullptr; ai = ai->ai_next) {
        Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!sock.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        set_nonblocking(sock.fd(), true);
        int rc = ::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            pollfd pfd{sock.fd(), POLLOUT, 0};
            rc = ::poll(&pfd, 1, millis_until(deadline));
            if (rc == 1) {
                int err = 0;
                socklen_t len = sizeof(err);
                ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                errno = err;
            } else {
                rc = -1;
                errno = ETIMEDOUT;
            }
        }
        if (rc == 0) {
            set_nonblocking(sock.fd(), false);
            int one = 1;
            ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return sock;
        }
        last_error = std::strerror(errno);
    }
    throw Error(ErrorKind::ConnectFailure,
                "cannot connect to " + address.host + ":" + std::to_string(address.port) + ": " + last_error);
}

ReadStatus LineStream::read_line(std::string& out, Clock::time_point deadline) {
    for (;;) {
        if (const auto nl = m_buffer.find('\n'); nl != std::string::npos) {
            out.assign(m_buffer, 0, nl);
            if (!out.empty() && out.back() == '\r') out.pop_back();
            m_buffer.erase(0, nl + 1);
            return ReadStatus::Line;
        }
        pollfd pfd{m_socket.fd(), POLLIN, 0};
        const int rc = ::poll(&pfd, 1, millis_until(deadline));
        if (rc == 0) return ReadStatus::Timeout;
        if (rc < 0) {
            if (errno == EINTR) continue;
            return ReadStatus::Closed;
        }
        char chunk[4096];
        const ssize_t got = ::recv(m_socket.fd(), chunk, sizeof(chunk), 0);
        if (got == 0) return ReadStatus::Closed;
        if (got < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            return ReadStatus::Closed;
        }
        m_buffer.append(chunk, static_cast<std::size_t>(got));
    }
}

bool LineStream::write_line(std::string_view line) {
    std::string payload(line);
    payload.push_back('\n');
    std::size_t sent = 0;
    while (sent < payload.size()) {
        const ssize_t n = ::send(m_socket.fd(), payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

Listener::Listener(const Address& address) {
    const auto info = resolve(address, true);
    std::string last_error = "no addresses";
    for (addrinfo* ai = info.head; ai != nullptr; ai = ai->ai_next) {
        Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!sock.valid()) continue;
        int one = 1;
        ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(sock.fd(), 64) != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        sockaddr_storage bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
        m_port = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                             : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
        m_socket = std::move(sock);
        return;
    }
    throw Error(ErrorKind::ConnectFailure, "cannot listen on " + address.host + ":" + std::to_string(address.port) +
                                               ": " + last_error);
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
    pollfd pfd{m_socket.fd(), POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) <= 0) return Socket();
    Socket client(::accept(m_socket.fd(), nullptr, nullptr));
    if (client.valid()) {
        int one = 1;
        ::setsockopt(client.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    return client;
}

}  // namespace iava::net
