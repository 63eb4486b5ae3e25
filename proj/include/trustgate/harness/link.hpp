#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "trustgate/net.hpp"

namespace trustgate::harness {

struct LinkOptions {
    std::string listen_host = "127.0.0.1";
    uint16_t listen_port = 0;
    std::string upstream_host = "127.0.0.1";
    uint16_t upstream_port = 0;
    int64_t one_way_delay_ms = 0;
};

/// TCP relay that delays every byte burst by the configured one-way latency,
/// in both directions. Wall-clock; used for end-to-end timing tests.
class LinkSimulator {
public:
    explicit LinkSimulator(LinkOptions opts) : opts_(std::move(opts)) {}
    ~LinkSimulator() { stop(); }

    bool start();
    void stop();
    uint16_t bound_port() const { return listener_.bound_port(); }

private:
    void accept_loop();
    void relay(net::Socket& from, net::Socket& to);

    LinkOptions opts_;
    net::TcpListener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};
    std::mutex threads_mu_;
    std::vector<std::thread> threads_;
};

}  // namespace trustgate::harness
