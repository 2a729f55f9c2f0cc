// Copyright (C) 2026 The iava-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "iava/remote.hpp"

#include <spdlog/spdlog.h>

#include "iava/error.hpp"
#include "iava/wire.hpp"
#include "net.hpp"

namespace iava::protocol {

namespace {

constexpr std::chrono::milliseconds kPollInterval{100};

class RemoteSession final : public ModelSession {
public:
    RemoteSession(SessionInfo info, net::LineStream stream, std::chrono::milliseconds timeout)
        : ModelSession(std::move(info)), m_stream(std::move(stream)), m_timeout(timeout) {}

protected:
    std::vector<double> do_attention(std::string_view image, std::string_view instruction) override {
        const auto id = m_next_id++;
        auto reply = round_trip(AttentionRequest{id, std::string(image), std::string(instruction)});
        auto* resp = std::get_if<AttentionResponse>(&reply);
        if (!resp || resp->id != id) throw Error(ErrorKind::SessionFailure, "unexpected reply to attention_req");
        return std::move(resp->scores);
    }

    std::vector<double> do_step(std::string_view image, const VisualInput& visual, std::string_view query,
                                std::span<const TokenId> prefix) override {
        const auto id = m_next_id++;
        auto reply = round_trip(
            StepRequest{id, std::string(image), visual, std::string(query), {prefix.begin(), prefix.end()}});
        auto* resp = std::get_if<StepResponse>(&reply);
        if (!resp || resp->id != id) throw Error(ErrorKind::SessionFailure, "unexpected reply to step_req");
        return std::move(resp->logits);
    }

private:
    Message round_trip(const Message& request) {
        if (!m_stream.write_line(encode(request))) throw Error(ErrorKind::SessionFailure, "peer closed the connection");
        std::string line;
        switch (m_stream.read_line(line, net::Clock::now() + m_timeout)) {
            case net::ReadStatus::Timeout:
                throw Error(ErrorKind::SessionFailure,
                            "no reply within " + std::to_string(m_timeout.count()) + " ms");
            case net::ReadStatus::Closed: throw Error(ErrorKind::SessionFailure, "peer closed the connection");
            case net::ReadStatus::Line: break;
        }
        Message reply;
        try {
            reply = decode(line, info().n_tokens);
        } catch (const Error& e) {
            throw Error(ErrorKind::SessionFailure, std::string("malformed reply: ") + e.what());
        }
        if (const auto* err = std::get_if<ErrorMessage>(&reply)) {
            throw Error(ErrorKind::SessionFailure, "peer error: " + err->reason);
        }
        return reply;
    }

    net::LineStream m_stream;
    std::chrono::milliseconds m_timeout;
    std::uint64_t m_next_id = 1;
};

void serve_connection(net::Socket socket, ModelSession& backend, const std::atomic<bool>& stopping) {
    net::LineStream stream(std::move(socket));
    if (!stream.write_line(encode(Hello{kProtocolVersion, backend.info()}))) return;

    std::string line;
    while (!stopping.load()) {
        const auto status = stream.read_line(line, net::Clock::now() + kPollInterval);
        if (status == net::ReadStatus::Timeout) continue;
        if (status == net::ReadStatus::Closed) return;
        if (line.empty()) continue;

        Message reply;
        std::uint64_t id = 0;
        try {
            auto request = decode(line, backend.info().n_tokens);
            if (auto* req = std::get_if<AttentionRequest>(&request)) {
                id = req->id;
                const auto att = backend.attention(req->image, req->instruction);
                reply = AttentionResponse{id, {att.scores().begin(), att.scores().end()}};
            } else if (auto* req = std::get_if<StepRequest>(&request)) {
                id = req->id;
                reply = StepResponse{id, backend.step(req->image, req->visual, req->query, req->prefix)};
            } else {
                reply = ErrorMessage{0, "unexpected message type"};
            }
        } catch (const std::exception& e) {
            reply = ErrorMessage{id, e.what()};
        }
        if (!stream.write_line(encode(reply))) return;
    }
}

}  // namespace

std::unique_ptr<ModelSession> connect_remote(std::string_view address, std::chrono::milliseconds request_timeout) {
    const auto addr = net::parse_address(address);
    net::LineStream stream(net::connect_to(addr, std::min(request_timeout, std::chrono::milliseconds(10'000))));

    std::string line;
    switch (stream.read_line(line, net::Clock::now() + request_timeout)) {
        case net::ReadStatus::Timeout: throw Error(ErrorKind::HandshakeMismatch, "peer sent no hello");
        case net::ReadStatus::Closed: throw Error(ErrorKind::ConnectFailure, "peer closed before hello");
        case net::ReadStatus::Line: break;
    }
    Message first;
    try {
        first = decode(line);
    } catch (const Error& e) {
        throw Error(ErrorKind::HandshakeMismatch, std::string("malformed hello: ") + e.what());
    }
    const auto* hello = std::get_if<Hello>(&first);
    if (!hello) throw Error(ErrorKind::HandshakeMismatch, "first message is not hello");
    if (hello->version != kProtocolVersion) {
        throw Error(ErrorKind::HandshakeMismatch, "peer speaks protocol version " + std::to_string(hello->version) +
                                                      ", engine speaks " + std::to_string(kProtocolVersion));
    }
    spdlog::debug("connected to {} (n_tokens={}, vocab_size={})", address, hello->info.n_tokens,
                  hello->info.vocab_size);
    return std::make_unique<RemoteSession>(hello->info, std::move(stream), request_timeout);
}

struct Server::Impl {
    BackendFactory factory;
    net::Listener listener;
    std::atomic<bool> stopping{false};
    std::thread runner;
    std::mutex workers_mutex;
    std::vector<std::thread> workers;

    Impl(BackendFactory f, const net::Address& address) : factory(std::move(f)), listener(address) {}
};

Server::Server(BackendFactory factory, std::string_view address)
    : m_impl(std::make_unique<Impl>(std::move(factory), net::parse_address(address))) {}

Server::~Server() { stop(); }

std::uint16_t Server::port() const noexcept { return m_impl->listener.port(); }

void Server::serve() {
    while (!m_impl->stopping.load()) {
        auto client = m_impl->listener.accept(kPollInterval);
        if (!client.valid()) continue;
        std::lock_guard lock(m_impl->workers_mutex);
        m_impl->workers.emplace_back([impl = m_impl.get(), sock = std::move(client)]() mutable {
            try {
                auto backend = impl->factory();
                serve_connection(std::move(sock), *backend, impl->stopping);
            } catch (const std::exception& e) {
                spdlog::warn("connection handler failed: {}", e.what());
            }
        });
    }
}

void Server::start() {
    m_impl->runner = std::thread([this] { serve(); });
}

void Server::stop() {
    if (!m_impl) return;
    m_impl->stopping.store(true);
    if (m_impl->runner.joinable()) m_impl->runner.join();
    std::lock_guard lock(m_impl->workers_mutex);
    for (auto& t : m_impl->workers) {
        if (t.joinable()) t.join();
    }
    m_impl->workers.clear();
}

}  // namespace iava::protocol
