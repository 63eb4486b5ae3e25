#include "trustgate/harness/link.hpp"

#include <sys/socket.h>

#include <chrono>
#include <memory>

namespace trustgate::harness {

bool LinkSimulator::start() {
    if (!listener_.open(opts_.listen_host, opts_.listen_port)) return false;
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void LinkSimulator::stop() {
    if (!running_.exchange(false)) return;
    listener_.close();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(threads_mu_);
        threads.swap(threads_);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
}

void LinkSimulator::accept_loop() {
    while (running_) {
        auto client = listener_.accept_conn();
        if (!client) break;
        auto upstream = net::connect_tcp(opts_.upstream_host, opts_.upstream_port);
        if (!upstream) continue;
        client->set_nodelay();

        auto a = std::make_shared<net::Socket>(std::move(*client));
        auto b = std::make_shared<net::Socket>(std::move(*upstream));
        std::lock_guard lock(threads_mu_);
        threads_.emplace_back([this, a, b] { relay(*a, *b); });
        threads_.emplace_back([this, a, b] { relay(*b, *a); });
    }
}

void LinkSimulator::relay(net::Socket& from, net::Socket& to) {
    uint8_t buf[16384];
    while (running_) {
        long n = from.read_some(buf, sizeof(buf));
        if (n <= 0) break;
        if (opts_.one_way_delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(opts_.one_way_delay_ms));
        }
        if (!to.write_all(BytesView(buf, static_cast<size_t>(n)))) break;
    }
    if (to.fd() >= 0) ::shutdown(to.fd(), SHUT_WR);
}

}  // namespace trustgate::harness
