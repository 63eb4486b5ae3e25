#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "trustgate/dataplane/pipeline.hpp"
#include "trustgate/dataplane/table.hpp"
#include "trustgate/net.hpp"

namespace trustgate::dataplane {

struct ProxyOptions {
    std::string listen_host = "127.0.0.1";
    uint16_t listen_port = 0;  // 0 picks an ephemeral port
    std::string upstream_host = "127.0.0.1";
    uint16_t upstream_port = 0;
    PipelineConfig pipeline;
};

template <typename T>
class BlockingQueue {
public:
    void push(T item) {
        {
            std::lock_guard lock(mu_);
            if (closed_) return;
            q_.push(std::move(item));
        }
        cv_.notify_one();
    }

    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return closed_ || !q_.empty(); });
        if (q_.empty()) return std::nullopt;
        T item = std::move(q_.front());
        q_.pop();
        return item;
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::queue<T> q_;
    bool closed_ = false;
};

/// Transparent TCP proxy with in-path OPN trust enforcement. Each accepted
/// connection is paired with an upstream connection; both directions are
/// framed into OPC UA chunks and validated before forwarding. Streams whose
/// first bytes do not frame are forwarded untouched. With validation
/// disabled the proxy is a byte-exact relay that still tags OPN chunks for
/// metrics.
class GatewayProxy {
public:
    GatewayProxy(ProxyOptions opts, std::shared_ptr<ThumbprintTable> table,
                 MetricsCollector* metrics = nullptr, VerdictLog* verdicts = nullptr);
    ~GatewayProxy();

    bool start();
    void stop();

    uint16_t bound_port() const { return listener_.bound_port(); }
    size_t connections_handled() const { return connections_handled_.load(); }

private:
    struct QueueItem {
        Bytes data;
        uint64_t enqueue_ns = 0;
        std::vector<MetricsRecord> pending;  // dequeue time filled by the writer
        bool shutdown_after = false;
    };

    struct Direction {
        BlockingQueue<QueueItem> queue;
        std::vector<MetricsRecord> pump_records;
        std::vector<MetricsRecord> writer_records;
    };

    struct ConnState {
        net::Socket client;
        net::Socket upstream;
        std::atomic<bool> quarantined{false};
        Direction to_upstream;
        Direction to_client;
        std::string flow_label;
    };

    void accept_loop();
    void run_connection(std::shared_ptr<ConnState> conn);
    void pump(ConnState& conn, net::Socket& from, Direction& dir, const char* dir_name);
    void writer(ConnState& conn, net::Socket& to, Direction& dir);
    void execute_drop(ConnState& conn);

    ProxyOptions opts_;
    std::shared_ptr<ThumbprintTable> table_;
    MetricsCollector* metrics_;
    VerdictLog* verdicts_;

    net::TcpListener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};
    std::atomic<size_t> connections_handled_{0};

    std::mutex conns_mu_;
    std::vector<std::thread> conn_threads_;
    std::vector<std::weak_ptr<ConnState>> live_conns_;
};

}  // namespace trustgate::dataplane
