// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cstdio>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "trustgate/bench/bench.hpp"
#include "trustgate/controller/controller.hpp"
#include "trustgate/crypto.hpp"
#include "trustgate/dataplane/extract.hpp"
#include "trustgate/dataplane/packet.hpp"
#include "trustgate/dataplane/proxy.hpp"
#include "trustgate/harness/endpoints.hpp"
#include "trustgate/harness/scenarios.hpp"
#include "trustgate/ledger/events.hpp"
#include "trustgate/ledger/registry.hpp"
#include "trustgate/ledger/tangle.hpp"

using namespace trustgate;
namespace dp = trustgate::dataplane;
namespace hs = trustgate::harness;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) g_failures++;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct HandshakeWorld {
    crypto::CertificateIdentity client_id = *crypto::make_self_signed("acc-client");
    crypto::CertificateIdentity server_id = *crypto::make_self_signed("acc-server");
    std::shared_ptr<dp::ThumbprintTable> table = std::make_shared<dp::ThumbprintTable>();
    dp::MetricsCollector metrics;
    dp::VerdictLog verdicts;
    std::unique_ptr<hs::TestServer> server;
    std::unique_ptr<dp::GatewayProxy> gateway;

    bool start() {
        server = std::make_unique<hs::TestServer>(
            hs::ServerOptions{server_id, {}, "127.0.0.1", 0, {}});
        if (!server->start()) return false;
        dp::ProxyOptions opts;
        opts.upstream_port = server->bound_port();
        opts.pipeline.drop_mode = dp::DropMode::Rst;
        gateway = std::make_unique<dp::GatewayProxy>(opts, table, &metrics, &verdicts);
        return gateway->start();
    }

    hs::ClientOptions client_options(const crypto::CertificateIdentity& id) {
        hs::ClientOptions copts;
        copts.port = gateway->bound_port();
        copts.identity = id;
        copts.read_timeout_ms = 3000;
        return copts;
    }
};

// ---- criterion 1 ----
void criterion_enforcement() {
    auto t0 = std::chrono::steady_clock::now();
    const size_t n = 1000;

    HandshakeWorld world;
    if (!world.start()) {
        report(1, "enforcement soundness and completeness", false, "world setup failed");
        return;
    }
    world.table->install(world.client_id.thumbprint);
    world.table->install(world.server_id.thumbprint);

    size_t trusted_established = 0;
    for (size_t i = 0; i < n; i++) {
        auto r = hs::perform_handshake(world.client_options(world.client_id));
        if (r.outcome == hs::Outcome::Established) trusted_established++;
    }

    auto rogue_id = *crypto::make_self_signed("acc-rogue");
    size_t untrusted_established = 0;
    size_t drops_at_opn = 0;
    for (size_t i = 0; i < n; i++) {
        auto r = hs::perform_handshake(world.client_options(rogue_id));
        if (r.outcome == hs::Outcome::Established) untrusted_established++;
        if (r.outcome != hs::Outcome::Established &&
            r.phase_reached == hs::Phase::OpenSecureChannel) {
            drops_at_opn++;
        }
    }

    double elapsed = seconds_since(t0);
    bool pass = trusted_established == n && untrusted_established == 0 && drops_at_opn == n &&
                elapsed < 120.0;
    std::ostringstream detail;
    detail << trusted_established << "/" << n << " trusted established, "
           << untrusted_established << "/" << n << " untrusted established, " << drops_at_opn
           << " rejections at the secure-channel phase, " << elapsed << "s";
    report(1, "enforcement soundness and completeness", pass, detail.str());
}

// ---- criterion 2 ----
void criterion_extraction_oracle() {
    std::mt19937_64 rng(20240);
    size_t checked = 0, mismatches = 0;

    auto build_opn = [&](size_t len) {
        opcua::OpnMessage m;
        std::string policy = opcua::kPolicyBasic256Sha256;
        m.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
        Bytes cert(len);
        for (auto& b : cert) b = static_cast<uint8_t>(rng());
        m.security_header.sender_certificate = std::move(cert);
        m.security_header.receiver_certificate_thumbprint = Bytes(20, 0x5A);
        Bytes wire;
        opcua::encode_opn(m, wire);
        return wire;
    };

    std::vector<size_t> lengths = {1, 88, 200, 255, 256, 257, 511, 512, 600, 4096, 25599, 25600};
    std::uniform_int_distribution<size_t> len_dist(1, 25600);
    for (int i = 0; i < 200; i++) lengths.push_back(len_dist(rng));

    for (size_t len : lengths) {
        Bytes wire = build_opn(len);
        opcua::OpnMessage decoded;
        if (opcua::decode_opn(wire, decoded) != opcua::DecodeError::Ok) {
            mismatches++;
            continue;
        }
        auto result = dp::extract_certificate(wire, 100);
        checked++;
        if (result.status != dp::ExtractStatus::Ok ||
            result.cert.concatenated() != *decoded.security_header.sender_certificate) {
            mismatches++;
        }
    }

    // Declared length zero must drop; one past the cap must hit the bound.
    bool zero_drops = false;
    {
        opcua::OpnMessage m;
        std::string policy = opcua::kPolicyBasic256Sha256;
        m.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
        m.security_header.sender_certificate = Bytes{};
        Bytes wire;
        opcua::encode_opn(m, wire);
        dp::ThumbprintTable table;
        auto verdict = dp::process_chunk(wire, opcua::MessageType::Opn, table, {});
        zero_drops = verdict.decision == dp::Decision::Drop &&
                     verdict.reason == dp::DropReason::ZeroLengthCertificate;
    }
    bool over_cap = dp::extract_certificate(build_opn(25601), 100).status ==
                    dp::ExtractStatus::CertificateTooLong;

    bool pass = mismatches == 0 && checked == lengths.size() && zero_drops && over_cap;
    std::ostringstream detail;
    detail << checked << " lengths equal the decoder oracle, zero-length drop=" << zero_drops
           << ", over-cap rejection=" << over_cap;
    report(2, "extraction oracle equivalence", pass, detail.str());
}

// ---- criterion 3 ----
void criterion_byte_reversal() {
    auto compose = [](uint8_t b0, uint8_t b1, uint8_t b2, uint8_t b3) {
        return (static_cast<uint32_t>(b0) << 24) | (static_cast<uint32_t>(b1) << 16) |
               (static_cast<uint32_t>(b2) << 8) | static_cast<uint32_t>(b3);
    };
    bool pass = dp::swap_length_bytes(compose(0x3A, 0x04, 0x00, 0x00)) == 1082 &&
                dp::swap_length_bytes(compose(0x00, 0x64, 0x00, 0x00)) == 25600;
    report(3, "length-field byte reversal", pass, "1082 and 25600 recovered exactly");
}

// ---- criterion 4 ----
void criterion_table_capacity() {
    dp::ThumbprintTable table;  // default capacity 1024
    size_t installed = 0;
    for (uint32_t i = 0; i < 1024; i++) {
        dp::Thumbprint tp{};
        tp[0] = static_cast<uint8_t>(i);
        tp[1] = static_cast<uint8_t>(i >> 8);
        tp[2] = 0xA5;
        if (table.install(tp) == dp::TableStatus::Ok) installed++;
    }
    dp::Thumbprint extra{};
    extra[3] = 0xFF;
    bool full = table.install(extra) == dp::TableStatus::Full;
    bool pass = installed == 1024 && full && table.size() == 1024;
    std::ostringstream detail;
    detail << installed << "/1024 installs, 1025th reports a full table";
    report(4, "match-action table capacity", pass, detail.str());
}

// ---- criterion 5 ----
void criterion_workflow() {
    auto admin = crypto::SigningKey::generate();
    ledger::AdminKeyring keyring{{admin.public_key()}};

    HandshakeWorld world;
    if (!world.start()) {
        report(5, "issue and revoke workflow", false, "world setup failed");
        return;
    }
    ledger::Tangle tangle;
    ledger::TangleCertSource source(tangle, keyring);
    controller::Controller ctl(world.table, keyring);
    auto pump = [&] {
        while (auto ev = source.poll()) ctl.on_event(*ev);
    };

    tangle.submit({ledger::ActionKind::Issue, world.server_id.der, int64_t(9999999999)}, admin);
    pump();

    size_t good_flips = 0;
    for (int rep = 0; rep < 20; rep++) {
        auto client = *crypto::make_self_signed("wf-client");
        auto copts = world.client_options(client);

        bool pre = hs::perform_handshake(copts).outcome == hs::Outcome::RejectedAtGateway;

        tangle.submit({ledger::ActionKind::Issue, client.der, int64_t(9999999999)}, admin);
        pump();  // one event-propagation cycle
        bool post_issue = hs::perform_handshake(copts).outcome == hs::Outcome::Established;

        // Duplicate issue is idempotent.
        tangle.submit({ledger::ActionKind::Issue, client.der, int64_t(9999999999)}, admin);
        pump();
        bool post_dup = hs::perform_handshake(copts).outcome == hs::Outcome::Established;

        tangle.submit({ledger::ActionKind::Revoke, client.der, 0}, admin);
        pump();
        bool post_revoke =
            hs::perform_handshake(copts).outcome == hs::Outcome::RejectedAtGateway;

        tangle.submit({ledger::ActionKind::Revoke, client.der, 0}, admin);
        pump();
        bool post_dup_revoke =
            hs::perform_handshake(copts).outcome == hs::Outcome::RejectedAtGateway;

        if (pre && post_issue && post_dup && post_revoke && post_dup_revoke) good_flips++;
    }
    bool pass = good_flips == 20;
    std::ostringstream detail;
    detail << good_flips << "/20 repetitions classified exactly";
    report(5, "issue and revoke workflow", pass, detail.str());
}

// ---- criterion 6 ----
void criterion_attacks() {
    auto rogue_server = hs::run_rogue_server(20);
    auto rogue_client = hs::run_rogue_client(20);
    auto middleperson = hs::run_middleperson(20, /*passive=*/false);
    auto replay = hs::run_replay(20);

    bool pass = rogue_server.established == 0 && rogue_server.attempts == 20 &&
                rogue_client.established == 0 && rogue_client.attempts == 20 &&
                middleperson.established == 0 && middleperson.attempts == 20 &&
                replay.established == 0 && replay.attempts == 20 &&
                replay.protocol_error == 20;
    std::ostringstream detail;
    detail << "rogue server 0/" << rogue_server.attempts << ", rogue client 0/"
           << rogue_client.attempts << ", middleperson 0/" << middleperson.attempts
           << ", replay " << replay.protocol_error << "/20 protocol errors";
    report(6, "attack scenarios blocked", pass, detail.str());
}

// ---- criterion 7 ----
void criterion_ledger_properties() {
    bool acyclic = true, monotone = true, replay_ok = true, no_mutations = true;

    {
        ledger::Tangle tangle;
        auto key = crypto::SigningKey::generate();
        std::set<ledger::TxId> confirmed;
        for (int i = 0; i < 1000; i++) {
            tangle.submit({ledger::ActionKind::Issue, Bytes(8, static_cast<uint8_t>(i)), 1},
                          key);
            if (i % 100 == 0) {
                tangle.confirm_step();
                std::set<ledger::TxId> now;
                for (const auto& id : tangle.all_ids()) {
                    if (tangle.is_confirmed(id)) now.insert(id);
                }
                for (const auto& id : confirmed) {
                    if (now.count(id) == 0) monotone = false;
                }
                confirmed = std::move(now);
            }
        }
        acyclic = tangle.is_acyclic() && tangle.size() == 1001;
    }

    {
        auto admin = crypto::SigningKey::generate();
        ledger::AdminKeyring keyring{{admin.public_key()}};
        std::mt19937_64 rng(515);
        for (int seq = 0; seq < 100 && replay_ok; seq++) {
            int64_t clock = 5000;
            ledger::Registry registry(keyring, [&clock] { return clock; });
            std::vector<Bytes> pool;
            for (int i = 0; i < 8; i++) pool.push_back(Bytes(12, static_cast<uint8_t>(i + 1)));
            for (int step = 0; step < 100; step++) {
                int roll = static_cast<int>(rng() % 10);
                const Bytes& cert = pool[rng() % pool.size()];
                if (roll < 5) {
                    registry.add_certificate(cert, clock + 1 + static_cast<int64_t>(rng() % 40),
                                             admin);
                } else if (roll < 8) {
                    registry.revoke_certificate(cert, admin);
                } else {
                    clock += static_cast<int64_t>(rng() % 15);
                }
            }
            std::map<crypto::Sha1Digest, int64_t> folded;
            for (const auto& entry : registry.action_log()) {
                auto tp = crypto::sha1(entry.action.certificate_der);
                if (entry.action.kind == ledger::ActionKind::Issue) {
                    folded[tp] = entry.action.expire_date_unix;
                } else {
                    folded.erase(tp);
                }
            }
            for (auto it = folded.begin(); it != folded.end();) {
                if (it->second < clock) it = folded.erase(it); else ++it;
            }
            auto got = registry.get_all_certificates();
            if (got.size() != folded.size()) replay_ok = false;
            for (const auto& rec : got) {
                auto it = folded.find(rec.thumbprint);
                if (it == folded.end() || it->second != rec.expire_date_unix) replay_ok = false;
            }
        }
    }

    {
        auto admin = crypto::SigningKey::generate();
        auto stranger = crypto::SigningKey::generate();
        ledger::AdminKeyring keyring{{admin.public_key()}};
        ledger::Tangle tangle;
        ledger::TangleCertSource source(tangle, keyring);
        auto table = std::make_shared<dp::ThumbprintTable>();
        controller::Controller ctl(table, keyring);
        uint64_t gen0 = table->generation();
        for (int i = 0; i < 50; i++) {
            tangle.submit({ledger::ActionKind::Issue, Bytes(16, static_cast<uint8_t>(i)), 999},
                          stranger);
        }
        while (auto ev = source.poll()) ctl.on_event(*ev);
        no_mutations = table->size() == 0 && table->generation() == gen0 &&
                       source.unauthorized_dropped() == 50;
    }

    bool pass = acyclic && monotone && replay_ok && no_mutations;
    std::ostringstream detail;
    detail << "acyclic=" << acyclic << ", confirmation monotone=" << monotone
           << ", registry replay oracle=" << replay_ok
           << ", unauthorized caused no mutations=" << no_mutations;
    report(7, "ledger structural properties", pass, detail.str());
}

// ---- criterion 8 ----
void criterion_q1() {
    const size_t n = 1000;
    auto t0 = std::chrono::steady_clock::now();
    auto bench_report = bench::run_q1(n, 4242);
    const auto& doc = bench_report.doc;

    size_t tagged_baseline = doc["arms"]["baseline"]["tagged_records"].get<size_t>();
    size_t tagged_validated = doc["arms"]["validated"]["tagged_records"].get<size_t>();
    double proc_base = doc["arms"]["baseline"]["processing"]["mean_ns"].get<double>();
    double proc_val = doc["arms"]["validated"]["processing"]["mean_ns"].get<double>();
    double ratio = doc["deltas"]["handshake_ratio"].get<double>();

    size_t established = 0;
    for (const auto& t : doc["trials"]) {
        if (t["outcome"].get<std::string>() == "Established") established++;
    }

    bool pass = tagged_baseline == 2 * n && tagged_validated == 2 * n &&
                proc_val > proc_base && ratio > 1.0 && established == 2 * n;
    std::ostringstream detail;
    detail << "tagged records " << tagged_baseline << "+" << tagged_validated << " (2x" << n
           << " per arm), processing mean " << proc_base << " -> " << proc_val
           << " ns, handshake ratio " << ratio << " (magnitude informational), "
           << seconds_since(t0) << "s";
    report(8, "in-path overhead methodology", pass, detail.str());
}

// ---- criterion 9 ----
void criterion_q2() {
    const size_t trials = 300;
    std::vector<std::string> presets = {"short", "medium", "long"};
    std::vector<size_t> sizes = {1024, 4096, 16384};
    auto l1 = bench::run_q2(trials, presets, sizes, "l1", 777);
    auto l2 = bench::run_q2(trials, presets, sizes, "l2", 777);

    auto median_of = [](const nlohmann::json& doc, const std::string& preset, size_t size) {
        for (const auto& cell : doc["cells"]) {
            if (cell["preset"] == preset && cell["payload_bytes"] == size) {
                return cell["median_ms"].get<double>();
            }
        }
        return -1.0;
    };

    bool monotone = true, under_cap = true, l2_faster = true, size_insensitive = true;
    for (size_t size : sizes) {
        double prev = 0;
        for (const auto& preset : presets) {
            double m = median_of(l1.doc, preset, size);
            if (m < prev) monotone = false;
            prev = m;
        }
    }
    for (const auto& cell : l1.doc["cells"]) {
        if (cell["max_ms"].get<double>() >= 20000.0) under_cap = false;
    }
    for (const auto& preset : presets) {
        double lo = 1e18, hi = 0;
        for (size_t size : sizes) {
            if (median_of(l2.doc, preset, size) >= median_of(l1.doc, preset, size)) {
                l2_faster = false;
            }
            double m = median_of(l2.doc, preset, size);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        if (hi - lo > 0.10 * hi) size_insensitive = false;
    }

    bool pass = monotone && under_cap && l2_faster && size_insensitive;
    std::ostringstream detail;
    detail << "monotone in distance=" << monotone << ", all below 20s simulated=" << under_cap
           << ", contract layer faster per cell=" << l2_faster
           << ", payload-insensitive within 10%=" << size_insensitive;
    report(9, "propagation methodology", pass, detail.str());
}

// ---- criterion 10 ----
void criterion_passthrough() {
    // Echo upstream; proxy with validation disabled must relay bit-exact.
    net::TcpListener echo_listener;
    if (!echo_listener.open("127.0.0.1", 0)) {
        report(10, "pass-through neutrality", false, "echo setup failed");
        return;
    }
    std::atomic<bool> echo_running{true};
    std::vector<std::thread> echo_threads;
    std::thread echo_accept([&] {
        while (echo_running) {
            auto sock = echo_listener.accept_conn();
            if (!sock) break;
            echo_threads.emplace_back([s = std::make_shared<net::Socket>(std::move(*sock))] {
                uint8_t buf[16384];
                while (true) {
                    long n = s->read_some(buf, sizeof(buf));
                    if (n <= 0) break;
                    if (!s->write_all(BytesView(buf, static_cast<size_t>(n)))) break;
                }
            });
        }
    });

    dp::ProxyOptions opts;
    opts.upstream_port = echo_listener.bound_port();
    opts.pipeline.validation_enabled = false;
    auto table = std::make_shared<dp::ThumbprintTable>();
    dp::GatewayProxy proxy(opts, table, nullptr, nullptr);
    bool ok = proxy.start();

    size_t total_bytes = 0;
    std::mt19937_64 rng(1010);
    if (ok) {
        for (int conn_idx = 0; conn_idx < 4 && ok; conn_idx++) {
            auto conn = net::connect_tcp("127.0.0.1", proxy.bound_port());
            if (!conn) { ok = false; break; }
            conn->set_recv_timeout_ms(10000);

            // Mixed traffic: valid chunks interleaved with raw noise bursts.
            Bytes stream;
            while (stream.size() < 2'500'000) {
                if (rng() % 3 == 0) {
                    opcua::OpnMessage m;
                    std::string policy = opcua::kPolicyBasic256Sha256;
                    m.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
                    m.security_header.sender_certificate = Bytes(rng() % 4000, 0x3C);
                    Bytes wire;
                    opcua::encode_opn(m, wire);
                    stream.insert(stream.end(), wire.begin(), wire.end());
                } else if (rng() % 3 == 1) {
                    opcua::MsgChunk msg;
                    msg.body.resize(rng() % 30000);
                    for (auto& b : msg.body) b = static_cast<uint8_t>(rng());
                    Bytes wire = opcua::encode_msg(msg);
                    stream.insert(stream.end(), wire.begin(), wire.end());
                } else {
                    Bytes noise(rng() % 20000);
                    for (auto& b : noise) b = static_cast<uint8_t>(rng());
                    stream.insert(stream.end(), noise.begin(), noise.end());
                }
            }
            total_bytes += stream.size();

            // Writer thread streams, main thread reads the echo back.
            std::thread writer([&conn, &stream, &ok] {
                size_t pos = 0;
                std::mt19937_64 wrng(99);
                while (pos < stream.size()) {
                    size_t burst = std::min<size_t>(1 + wrng() % 16000, stream.size() - pos);
                    if (!conn->write_all(BytesView(stream.data() + pos, burst))) {
                        ok = false;
                        break;
                    }
                    pos += burst;
                }
            });
            Bytes received(stream.size());
            bool read_ok = conn->read_exact(received.data(), received.size());
            writer.join();
            if (!read_ok || crypto::sha256(received) != crypto::sha256(stream)) ok = false;
        }
    }

    proxy.stop();
    echo_running = false;
    echo_listener.close();
    echo_accept.join();
    for (auto& t : echo_threads) t.join();

    std::ostringstream detail;
    detail << total_bytes << " bytes relayed bit-exact across 4 connections";
    report(10, "pass-through neutrality", ok && total_bytes >= 10'000'000, detail.str());
}

// ---- criterion 11 ----
void criterion_fuzz() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(31337);
    dp::StreamChunker chunker;
    const size_t iterations = 1'000'000;

    for (size_t i = 0; i < iterations; i++) {
        Bytes input;
        if (i % 4 == 0) {
            opcua::OpnMessage m;
            std::string policy = opcua::kPolicyAes128Sha256RsaOaep;
            m.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
            m.security_header.sender_certificate = Bytes(rng() % 1024, 0x66);
            Bytes wire;
            opcua::encode_opn(m, wire);
            input = std::move(wire);
            size_t flips = 1 + rng() % 6;
            for (size_t f = 0; f < flips && !input.empty(); f++) {
                input[rng() % input.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
            }
            if (rng() % 4 == 0 && input.size() > 2) input.resize(rng() % input.size());
        } else {
            input.resize(rng() % 256);
            for (auto& b : input) b = static_cast<uint8_t>(rng());
        }

        opcua::MessageHeader hdr;
        (void)opcua::decode_message_header(input, hdr);
        opcua::OpnMessage opn;
        (void)opcua::decode_opn(input, opn);
        opcua::HelloMessage hel;
        (void)opcua::decode_hello(input, hel);
        opcua::AckMessage ack;
        (void)opcua::decode_ack(input, ack);
        opcua::ErrorMessage err;
        (void)opcua::decode_error(input, err);
        opcua::MsgChunk msg;
        (void)opcua::decode_msg(input, msg);
        (void)dp::extract_certificate(input);
        dp::ParsedPacket pkt;
        (void)dp::parse_frame(input, pkt);
        if (i % 113 == 0) chunker = dp::StreamChunker();
        (void)chunker.feed(input);
    }
    std::ostringstream detail;
    detail << iterations << " inputs decoded with typed results only, " << seconds_since(t0)
           << "s";
    report(11, "decoder fuzz totality", true, detail.str());
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    criterion_enforcement();
    criterion_extraction_oracle();
    criterion_byte_reversal();
    criterion_table_capacity();
    criterion_workflow();
    criterion_attacks();
    criterion_ledger_properties();
    criterion_q1();
    criterion_q2();
    criterion_passthrough();
    criterion_fuzz();
    if (g_failures == 0) {
        std::printf("================\nall criteria passed\n");
    } else {
        std::printf("================\n%d criteria FAILED\n", g_failures);
    }
    return g_failures;
}
