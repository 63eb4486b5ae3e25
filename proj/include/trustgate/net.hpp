#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "trustgate/bytes.hpp"

namespace trustgate::net {

/// Thin RAII wrapper over a POSIX TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { close(); }

    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void close();
    /// Abortive close: pending data discarded, peer sees a reset.
    void close_rst();
    /// Arms reset-on-close without closing; safe while another thread reads.
    void set_linger_rst();
    void shutdown_both();

    bool set_recv_timeout_ms(int ms);
    bool set_nodelay();

    /// Blocking write of the whole buffer. False on error/EPIPE.
    bool write_all(BytesView data);

    /// Single read up to max_len bytes. Returns read size, 0 on orderly
    /// shutdown, -1 on error, -2 on timeout.
    long read_some(uint8_t* buf, size_t max_len);

    /// Reads exactly n bytes unless the peer closes or errors out.
    bool read_exact(uint8_t* buf, size_t n);

private:
    int fd_ = -1;
};

class TcpListener {
public:
    TcpListener() = default;

    /// Binds and listens; port 0 picks an ephemeral port.
    bool open(const std::string& host, uint16_t port);
    std::optional<Socket> accept_conn();
    uint16_t bound_port() const { return bound_port_; }
    bool valid() const { return sock_.valid(); }

    // Wakes any thread blocked in accept before releasing the socket.
    void close() {
        sock_.shutdown_both();
        sock_.close();
    }

private:
    Socket sock_;
    uint16_t bound_port_ = 0;
};

std::optional<Socket> connect_tcp(const std::string& host, uint16_t port,
                                  int timeout_ms = 5000);

}  // namespace trustgate::net
