#include "trustgate/dataplane/proxy.hpp"

#include <sys/socket.h>

#include <chrono>

#include "trustgate/dataplane/chunker.hpp"

namespace trustgate::dataplane {

namespace {

uint64_t now_ns() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

void shutdown_fd(int fd) {
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
}

}  // namespace

GatewayProxy::GatewayProxy(ProxyOptions opts, std::shared_ptr<ThumbprintTable> table,
                           MetricsCollector* metrics, VerdictLog* verdicts)
    : opts_(std::move(opts)), table_(std::move(table)), metrics_(metrics), verdicts_(verdicts) {}

GatewayProxy::~GatewayProxy() { stop(); }

bool GatewayProxy::start() {
    if (!listener_.open(opts_.listen_host, opts_.listen_port)) return false;
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void GatewayProxy::stop() {
    if (!running_.exchange(false)) return;
    listener_.close();
    {
        std::lock_guard lock(conns_mu_);
        for (auto& weak : live_conns_) {
            if (auto conn = weak.lock()) {
                shutdown_fd(conn->client.fd());
                shutdown_fd(conn->upstream.fd());
                conn->to_upstream.queue.close();
                conn->to_client.queue.close();
            }
        }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(conns_mu_);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
}

void GatewayProxy::accept_loop() {
    while (running_) {
        auto client = listener_.accept_conn();
        if (!client) break;
        auto upstream = net::connect_tcp(opts_.upstream_host, opts_.upstream_port);
        if (!upstream) {
            continue;  // upstream down: refuse by closing the client side
        }
        client->set_nodelay();
        auto conn = std::make_shared<ConnState>();
        conn->client = std::move(*client);
        conn->upstream = std::move(*upstream);
        conn->flow_label = "conn" + std::to_string(connections_handled_.fetch_add(1));

        std::lock_guard lock(conns_mu_);
        live_conns_.push_back(conn);
        conn_threads_.emplace_back([this, conn] { run_connection(conn); });
    }
}

void GatewayProxy::run_connection(std::shared_ptr<ConnState> conn) {
    std::thread w_up([this, &conn] { writer(*conn, conn->upstream, conn->to_upstream); });
    std::thread w_down([this, &conn] { writer(*conn, conn->client, conn->to_client); });
    std::thread p_up([this, &conn] { pump(*conn, conn->client, conn->to_upstream, "c2s"); });
    std::thread p_down([this, &conn] { pump(*conn, conn->upstream, conn->to_client, "s2c"); });

    p_up.join();
    p_down.join();
    conn->to_upstream.queue.close();
    conn->to_client.queue.close();
    w_up.join();
    w_down.join();

    if (metrics_) {
        std::vector<MetricsRecord> all;
        for (Direction* d : {&conn->to_upstream, &conn->to_client}) {
            all.insert(all.end(), d->pump_records.begin(), d->pump_records.end());
            all.insert(all.end(), d->writer_records.begin(), d->writer_records.end());
        }
        metrics_->merge(std::move(all));
    }
}

void GatewayProxy::execute_drop(ConnState& conn) {
    if (opts_.pipeline.drop_mode == DropMode::Rst) {
        // Abortive teardown: arm reset-on-close, wake both pumps. The RAII
        // close after the threads join emits the reset.
        conn.client.set_linger_rst();
        conn.upstream.set_linger_rst();
        conn.client.shutdown_both();
        conn.upstream.shutdown_both();
        conn.to_upstream.queue.close();
        conn.to_client.queue.close();
    } else {
        // Silent drop: swallow everything from now on; the endpoints see a
        // connection that simply stops making progress.
        conn.quarantined = true;
    }
}

void GatewayProxy::pump(ConnState& conn, net::Socket& from, Direction& dir,
                        const char* dir_name) {
    StreamChunker chunker(opts_.pipeline.max_chunks);
    bool raw_mode = false;       // head of stream was not OPC UA framing
    bool observing = true;       // disabled mode: still tag OPN chunks until unframeable
    const bool validate = opts_.pipeline.validation_enabled;
    uint8_t buf[16384];

    while (true) {
        long n = from.read_some(buf, sizeof(buf));
        if (n <= 0) break;
        if (conn.quarantined) continue;
        BytesView burst(buf, static_cast<size_t>(n));

        if (!validate) {
            // Pass-through: forward the burst bit-exact, frame a copy only to
            // tag OPN chunks for metrics.
            QueueItem item;
            item.data.assign(burst.begin(), burst.end());
            if (observing && chunker.state() == ChunkerState::Framing) {
                auto chunks = chunker.feed(burst);
                for (const auto& c : chunks) {
                    uint64_t t0 = now_ns();
                    Verdict v = process_chunk(c.bytes, c.type, *table_, opts_.pipeline);
                    uint64_t t1 = now_ns();
                    MetricsRecord rec;
                    rec.processing_ns = t1 - t0;
                    rec.tagged = v.was_opn;
                    item.pending.push_back(rec);
                }
                if (chunker.state() != ChunkerState::Framing) observing = false;
            }
            item.enqueue_ns = now_ns();
            dir.queue.push(std::move(item));
            continue;
        }

        if (raw_mode) {
            QueueItem item;
            item.data.assign(burst.begin(), burst.end());
            item.enqueue_ns = now_ns();
            dir.queue.push(std::move(item));
            continue;
        }

        auto chunks = chunker.feed(burst);
        for (const auto& c : chunks) {
            uint64_t t0 = now_ns();
            Verdict v = process_chunk(c.bytes, c.type, *table_, opts_.pipeline);
            uint64_t t1 = now_ns();
            MetricsRecord rec;
            rec.processing_ns = t1 - t0;
            rec.tagged = v.was_opn;

            if (v.was_opn && verdicts_) {
                VerdictRecord vr;
                vr.flow = conn.flow_label + "/" + dir_name;
                vr.thumbprint_hex =
                    v.sender_thumbprint ? to_hex(*v.sender_thumbprint) : std::string();
                vr.decision = v.decision;
                vr.reason = v.reason;
                verdicts_->append(std::move(vr));
            }

            if (v.decision == Decision::Drop) {
                dir.pump_records.push_back(rec);  // dropped chunk never dequeues
                execute_drop(conn);
                break;
            }
            QueueItem item;
            item.data = c.bytes;
            item.pending.push_back(rec);
            item.enqueue_ns = now_ns();
            dir.queue.push(std::move(item));
        }
        if (conn.quarantined || !from.valid()) {
            if (!from.valid()) break;
            continue;
        }

        switch (chunker.state()) {
            case ChunkerState::Framing:
                break;
            case ChunkerState::NotOpcua: {
                // Not OPC UA traffic: hand over what was buffered and relay
                // the rest of the stream untouched.
                raw_mode = true;
                QueueItem item;
                item.data = chunker.take_buffered();
                item.enqueue_ns = now_ns();
                if (!item.data.empty()) dir.queue.push(std::move(item));
                break;
            }
            case ChunkerState::Desynced:
            case ChunkerState::Overflow: {
                // Framed OPC UA traffic that stopped framing: fail closed.
                if (verdicts_) {
                    verdicts_->append({conn.flow_label + "/" + dir_name, "", Decision::Drop,
                                       DropReason::MalformedOpn});
                }
                execute_drop(conn);
                if (opts_.pipeline.drop_mode == DropMode::Rst) return;
                break;
            }
        }
    }

    // Reader side finished: let the peer direction drain, then propagate the
    // half-close so the upstream sees EOF.
    dir.queue.push(QueueItem{{}, now_ns(), {}, true});
}

void GatewayProxy::writer(ConnState& conn, net::Socket& to, Direction& dir) {
    while (true) {
        auto item = dir.queue.pop();
        if (!item) break;
        uint64_t dq = now_ns() - item->enqueue_ns;
        for (auto rec : item->pending) {
            rec.dequeue_ns = dq;
            dir.writer_records.push_back(rec);
        }
        if (!item->data.empty()) {
            if (!to.write_all(item->data)) break;
        }
        if (item->shutdown_after) {
            if (to.fd() >= 0) ::shutdown(to.fd(), SHUT_WR);
        }
    }
    (void)conn;
}

}  // namespace trustgate::dataplane
