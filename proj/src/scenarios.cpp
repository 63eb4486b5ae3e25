#include "trustgate/harness/scenarios.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "trustgate/dataplane/proxy.hpp"
#include "trustgate/harness/endpoints.hpp"

namespace trustgate::harness {

namespace dp = trustgate::dataplane;
namespace opc = trustgate::opcua;

namespace {

struct AttemptRow {
    size_t index;
    Outcome outcome;
    Phase phase;
    double ms;
};

void count_outcome(ScenarioOutcome& sc, const HandshakeResult& r) {
    sc.attempts++;
    switch (r.outcome) {
        case Outcome::Established: sc.established++; break;
        case Outcome::RejectedAtGateway: sc.rejected++; break;
        case Outcome::Timeout: sc.timeout++; break;
        case Outcome::ProtocolError: sc.protocol_error++; break;
    }
}

nlohmann::json attempts_json(const std::vector<AttemptRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        arr.push_back({{"attempt", row.index},
                       {"outcome", outcome_name(row.outcome)},
                       {"phase", phase_name(row.phase)},
                       {"duration_ms", row.ms}});
    }
    return arr;
}

nlohmann::json timing_percentiles(std::vector<AttemptRow> rows) {
    std::vector<uint64_t> us;
    us.reserve(rows.size());
    for (const auto& row : rows) us.push_back(static_cast<uint64_t>(row.ms * 1000.0));
    auto s = dp::summarize(std::move(us));
    return {{"p50_ms", s.p50 / 1000.0}, {"p95_ms", s.p95 / 1000.0}, {"max_ms", s.max / 1000.0}};
}

nlohmann::json verdict_counts(const dp::VerdictLog& log) {
    size_t allows = 0, drops = 0;
    for (const auto& v : log.records()) {
        if (v.decision == dp::Decision::Allow) allows++; else drops++;
    }
    return {{"opn_allow", allows}, {"opn_drop", drops}};
}

/// Interception actor: terminates the client-facing connection and
/// re-originates toward the target. Active mode rewrites every OPN chunk to
/// carry its own certificate and key proof; passive mode is a byte relay.
class MitmActor {
public:
    MitmActor(std::string upstream_host, uint16_t upstream_port,
              crypto::CertificateIdentity forged, bool passive)
        : upstream_host_(std::move(upstream_host)),
          upstream_port_(upstream_port),
          forged_(std::move(forged)),
          passive_(passive) {}

    ~MitmActor() { stop(); }

    bool start() {
        if (!listener_.open("127.0.0.1", 0)) return false;
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        return true;
    }

    void stop() {
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

    uint16_t bound_port() const { return listener_.bound_port(); }

private:
    void accept_loop() {
        while (running_) {
            auto client = listener_.accept_conn();
            if (!client) break;
            auto upstream = net::connect_tcp(upstream_host_, upstream_port_);
            if (!upstream) continue;
            client->set_nodelay();
            auto a = std::make_shared<net::Socket>(std::move(*client));
            auto b = std::make_shared<net::Socket>(std::move(*upstream));
            std::lock_guard lock(threads_mu_);
            threads_.emplace_back([this, a, b] { relay(*a, *b); });
            threads_.emplace_back([this, a, b] { relay(*b, *a); });
        }
    }

    // Re-signs the key-possession proof under the forged identity so the
    // swapped certificate stays internally consistent.
    Bytes rewrite_opn(const Bytes& chunk) {
        opc::OpnMessage opn;
        if (opc::decode_opn(chunk, opn) != opc::DecodeError::Ok) return chunk;
        if (!opn.security_header.sender_certificate) return chunk;  // discovery

        opn.security_header.sender_certificate = forged_.der;
        std::string policy = opn.security_header.policy_uri_string();
        ByteReader r(opn.body);
        Bytes nonce;
        if (r.read_bytes(32, nonce)) {
            Bytes msg(nonce);
            msg.insert(msg.end(), policy.begin(), policy.end());
            const char* role = "REQ";
            msg.insert(msg.end(), role, role + 3);
            crypto::Signature sig = forged_.key.sign(msg);
            ByteWriter w;
            w.write_bytes(nonce);
            w.write_i32_le(static_cast<int32_t>(sig.size()));
            w.write_bytes(BytesView(sig.data(), sig.size()));
            opn.body = w.take();
        }
        Bytes out;
        if (opc::encode_opn(opn, out) != opc::DecodeError::Ok) return chunk;
        return out;
    }

    void relay(net::Socket& from, net::Socket& to) {
        dp::StreamChunker chunker;
        uint8_t buf[16384];
        while (running_) {
            long n = from.read_some(buf, sizeof(buf));
            if (n <= 0) break;
            BytesView burst(buf, static_cast<size_t>(n));
            if (passive_) {
                if (!to.write_all(burst)) break;
                continue;
            }
            bool ok = true;
            for (auto& c : chunker.feed(burst)) {
                Bytes out = (c.type == opc::MessageType::Opn) ? rewrite_opn(c.bytes) : c.bytes;
                if (!to.write_all(out)) {
                    ok = false;
                    break;
                }
            }
            if (!ok || chunker.state() != dp::ChunkerState::Framing) break;
        }
        if (to.fd() >= 0) ::shutdown(to.fd(), SHUT_WR);
    }

    std::string upstream_host_;
    uint16_t upstream_port_;
    crypto::CertificateIdentity forged_;
    bool passive_;
    net::TcpListener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};
    std::mutex threads_mu_;
    std::vector<std::thread> threads_;
};

struct World {
    std::shared_ptr<dp::ThumbprintTable> table = std::make_shared<dp::ThumbprintTable>();
    dp::MetricsCollector metrics;
    dp::VerdictLog verdicts;
    std::unique_ptr<TestServer> server;
    std::unique_ptr<dp::GatewayProxy> gateway;

    // Gateway in front of `server_port`, abortive drops for deterministic
    // classification.
    bool add_gateway(uint16_t server_port) {
        dp::ProxyOptions popts;
        popts.upstream_port = server_port;
        popts.pipeline.drop_mode = dp::DropMode::Rst;
        gateway = std::make_unique<dp::GatewayProxy>(popts, table, &metrics, &verdicts);
        return gateway->start();
    }
};

ScenarioOutcome run_attempts(const std::string& name, World& world, ClientOptions copts,
                             size_t n, nlohmann::json config) {
    ScenarioOutcome sc;
    sc.name = name;
    std::vector<AttemptRow> rows;
    for (size_t i = 0; i < n; i++) {
        HandshakeResult r = perform_handshake(copts);
        count_outcome(sc, r);
        rows.push_back({i, r.outcome, r.phase_reached, r.duration_ms});
    }
    sc.report = {{"scenario", name},
                 {"config", std::move(config)},
                 {"attempts", attempts_json(rows)},
                 {"counts",
                  {{"attempts", sc.attempts},
                   {"established", sc.established},
                   {"rejected_at_gateway", sc.rejected},
                   {"timeout", sc.timeout},
                   {"protocol_error", sc.protocol_error}}},
                 {"timing", timing_percentiles(rows)},
                 {"gateway", verdict_counts(world.verdicts)}};
    return sc;
}

crypto::CertificateIdentity must_identity(const std::string& cn) {
    auto id = crypto::make_self_signed(cn);
    if (!id) std::abort();
    return *id;
}

}  // namespace

bool ScenarioOutcome::write_report(const std::string& path) const {
    std::ofstream out(path);
    if (!out) return false;
    out << report.dump(2) << '\n';
    return out.good();
}

ScenarioOutcome run_rogue_server(size_t n, bool issue_rogue_cert) {
    auto client_id = must_identity("trusted-client");
    auto rogue_id = must_identity("rogue-server");

    World world;
    world.table->install(client_id.thumbprint);
    if (issue_rogue_cert) world.table->install(rogue_id.thumbprint);

    world.server = std::make_unique<TestServer>(ServerOptions{rogue_id, {}, "127.0.0.1", 0, {}});
    if (!world.server->start() || !world.add_gateway(world.server->bound_port())) {
        return {};
    }

    ClientOptions copts;
    copts.port = world.gateway->bound_port();
    copts.identity = client_id;
    copts.read_timeout_ms = 1000;
    return run_attempts(issue_rogue_cert ? "rogue_server_issued" : "rogue_server", world, copts,
                        n, {{"rogue_cert_trusted", issue_rogue_cert}});
}

ScenarioOutcome run_rogue_client(size_t n) {
    auto server_id = must_identity("trusted-server");
    auto rogue_id = must_identity("rogue-client");

    World world;
    world.table->install(server_id.thumbprint);  // rogue client stays untrusted

    world.server = std::make_unique<TestServer>(ServerOptions{server_id, {}, "127.0.0.1", 0, {}});
    if (!world.server->start() || !world.add_gateway(world.server->bound_port())) {
        return {};
    }

    ClientOptions copts;
    copts.port = world.gateway->bound_port();
    copts.identity = rogue_id;
    copts.read_timeout_ms = 1000;
    return run_attempts("rogue_client", world, copts, n, {{"client_cert_trusted", false}});
}

ScenarioOutcome run_middleperson(size_t n, bool passive) {
    auto client_id = must_identity("trusted-client");
    auto server_id = must_identity("trusted-server");
    auto forged_id = must_identity("middleperson");

    World world;
    world.table->install(client_id.thumbprint);
    world.table->install(server_id.thumbprint);

    world.server = std::make_unique<TestServer>(ServerOptions{server_id, {}, "127.0.0.1", 0, {}});
    if (!world.server->start()) return {};

    // Server-side gateway guards the segment behind the interception point.
    dp::ProxyOptions inner_opts;
    inner_opts.upstream_port = world.server->bound_port();
    inner_opts.pipeline.drop_mode = dp::DropMode::Rst;
    dp::GatewayProxy inner_gateway(inner_opts, world.table, &world.metrics, &world.verdicts);
    if (!inner_gateway.start()) return {};

    MitmActor mitm("127.0.0.1", inner_gateway.bound_port(), forged_id, passive);
    if (!mitm.start()) return {};

    // Client-side gateway sees whatever the actor re-originates.
    if (!world.add_gateway(mitm.bound_port())) return {};

    ClientOptions copts;
    copts.port = world.gateway->bound_port();
    copts.identity = client_id;
    copts.read_timeout_ms = 1000;
    auto sc = run_attempts(passive ? "middleperson_passive" : "middleperson", world, copts, n,
                           {{"passive", passive}});
    mitm.stop();
    inner_gateway.stop();
    return sc;
}

ScenarioOutcome run_replay(size_t n) {
    auto client_id = must_identity("trusted-client");
    auto server_id = must_identity("trusted-server");
    auto attacker_key = crypto::SigningKey::generate();

    // The attacker presents the trusted certificate bytes but holds its own
    // key, so the thumbprint check passes and the key proof cannot.
    crypto::CertificateIdentity replayed{attacker_key, server_id.der, server_id.thumbprint};

    World world;
    world.table->install(client_id.thumbprint);
    world.table->install(server_id.thumbprint);

    world.server = std::make_unique<TestServer>(ServerOptions{replayed, {}, "127.0.0.1", 0, {}});
    if (!world.server->start() || !world.add_gateway(world.server->bound_port())) {
        return {};
    }

    ClientOptions copts;
    copts.port = world.gateway->bound_port();
    copts.identity = client_id;
    copts.read_timeout_ms = 1000;
    return run_attempts("certificate_replay", world, copts, n,
                        {{"replayed_certificate", true}});
}

}  // namespace trustgate::harness
