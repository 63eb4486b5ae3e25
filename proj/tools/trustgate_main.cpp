#include <csignal>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "trustgate/bench/bench.hpp"
#include "trustgate/config.hpp"
#include "trustgate/dataplane/packet.hpp"
#include "trustgate/gatewayapp.hpp"
#include "trustgate/ledger/tangle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOperational = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_shutdown{false};

void on_signal(int) { g_shutdown = true; }

using trustgate::Bytes;
using trustgate::BytesView;

// ---- control socket client ----

std::optional<nlohmann::json> control_call(const std::string& host, uint16_t port,
                                           const nlohmann::json& request) {
    auto sock = trustgate::net::connect_tcp(host, port);
    if (!sock) return std::nullopt;
    std::string payload = request.dump();
    trustgate::ByteWriter w;
    w.write_u32_le(static_cast<uint32_t>(payload.size()));
    w.write_str(payload);
    if (!sock->write_all(w.data())) return std::nullopt;

    uint8_t len_buf[4];
    if (!sock->read_exact(len_buf, 4)) return std::nullopt;
    uint32_t len = static_cast<uint32_t>(len_buf[0]) | (len_buf[1] << 8) | (len_buf[2] << 16) |
                   (static_cast<uint32_t>(len_buf[3]) << 24);
    if (len > 16 * 1024 * 1024) return std::nullopt;
    std::vector<uint8_t> buf(len);
    if (len > 0 && !sock->read_exact(buf.data(), len)) return std::nullopt;
    auto doc = nlohmann::json::parse(buf.begin(), buf.end(), nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

bool split_host_port(const std::string& value, std::string& host, uint16_t& port) {
    auto colon = value.rfind(':');
    if (colon == std::string::npos) return false;
    host = value.substr(0, colon);
    int p = std::atoi(value.c_str() + colon + 1);
    if (p <= 0 || p > 65535) return false;
    port = static_cast<uint16_t>(p);
    return true;
}

int cmd_gateway_run(const std::string& config_path) {
    std::string error;
    auto cfg = trustgate::load_config_file(config_path, error);
    if (!cfg) {
        std::cerr << "config error: " << error << "\n";
        return kExitConfig;
    }
    trustgate::GatewayApp app(*cfg);
    if (!app.start(error)) {
        std::cerr << "start failed: " << error << "\n";
        return kExitOperational;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_shutdown) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    app.stop();
    return kExitOk;
}

int cmd_admin(const std::string& verb, const std::string& cert_path, const std::string& layer,
              int64_t expire_unix, const std::string& control) {
    const char* key_path = std::getenv("TRUSTGATE_ADMIN_KEY");
    if (!key_path) {
        std::cerr << "TRUSTGATE_ADMIN_KEY is not set (path to the administrator key PEM)\n";
        return kExitConfig;
    }
    auto key = trustgate::crypto::SigningKey::load_pem_file(key_path);
    if (!key) {
        std::cerr << "cannot load administrator key from " << key_path << "\n";
        return kExitConfig;
    }
    auto der = trustgate::crypto::load_certificate_file(cert_path);
    if (!der) {
        std::cerr << "CertificateUnparseable: " << cert_path << "\n";
        return kExitOperational;
    }

    std::string host;
    uint16_t port = 0;
    if (!split_host_port(control, host, port)) {
        std::cerr << "bad --control value, expected HOST:PORT\n";
        return kExitConfig;
    }

    trustgate::ledger::CertificateAction action;
    action.certificate_der = *der;
    if (verb == "issue") {
        action.kind = trustgate::ledger::ActionKind::Issue;
        action.expire_date_unix = expire_unix;
    } else {
        action.kind = trustgate::ledger::ActionKind::Revoke;
    }
    Bytes payload = trustgate::ledger::encode_action(action);

    if (layer == "l1") {
        auto tips = control_call(host, port, {{"op", "tips"}});
        if (!tips || !(*tips).value("ok", false)) {
            std::cerr << "cannot reach gateway control endpoint at " << control << "\n";
            return kExitOperational;
        }
        trustgate::ledger::LedgerTransaction tx;
        tx.tag = "certificate";
        tx.payload = payload;
        tx.sender_public_key = key->public_key();
        auto ap0 = trustgate::from_hex((*tips)["tips"][0].get<std::string>());
        auto ap1 = trustgate::from_hex((*tips)["tips"][1].get<std::string>());
        if (!ap0 || !ap1 || ap0->size() != 32 || ap1->size() != 32) {
            std::cerr << "gateway returned malformed tips\n";
            return kExitOperational;
        }
        std::copy(ap0->begin(), ap0->end(), tx.approvals[0].begin());
        std::copy(ap1->begin(), ap1->end(), tx.approvals[1].begin());
        tx.timestamp_ms = static_cast<int64_t>(std::time(nullptr)) * 1000;
        Bytes signing = trustgate::ledger::transaction_signing_bytes(
            tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
        auto sig = key->sign(signing);

        nlohmann::json req = {
            {"op", "submit_tx"},
            {"tx",
             {{"tag", tx.tag},
              {"payload_b64", trustgate::to_base64(tx.payload)},
              {"pub_b64", trustgate::to_base64(BytesView(tx.sender_public_key.data(), 32))},
              {"sig_b64", trustgate::to_base64(BytesView(sig.data(), sig.size()))},
              {"approvals",
               {(*tips)["tips"][0].get<std::string>(), (*tips)["tips"][1].get<std::string>()}},
              {"timestamp_ms", tx.timestamp_ms}}}};
        auto resp = control_call(host, port, req);
        if (!resp || !(*resp).value("ok", false)) {
            std::cerr << "submission failed: "
                      << (resp ? (*resp).value("error", "unknown") : "no response") << "\n";
            return kExitOperational;
        }
        std::cout << "transaction " << (*resp)["txid"].get<std::string>() << "\n"
                  << verb << " thumbprint " << (*resp)["thumbprint"].get<std::string>() << "\n";
        return kExitOk;
    }

    // Contract layer: prove key possession over the canonical action bytes.
    auto sig = key->sign(payload);
    nlohmann::json req = {
        {"op", verb == "issue" ? "l2_add" : "l2_revoke"},
        {"cert_b64", trustgate::to_base64(*der)},
        {"pub_b64", trustgate::to_base64(BytesView(key->public_key().data(), 32))},
        {"sig_b64", trustgate::to_base64(BytesView(sig.data(), sig.size()))}};
    if (verb == "issue") req["expire"] = expire_unix;
    auto resp = control_call(host, port, req);
    if (!resp || !(*resp).value("ok", false)) {
        std::string why = resp ? (*resp).value("error", "unknown") : "no response";
        if (why == "Unauthorized") why = "UnauthorizedKey";
        std::cerr << verb << " failed: " << why << "\n";
        return kExitOperational;
    }
    std::cout << verb << " thumbprint " << (*resp)["thumbprint"].get<std::string>() << "\n";
    return kExitOk;
}

int cmd_replay(const std::string& capture_path, const std::vector<std::string>& trust_files,
               uint16_t opcua_port, const std::string& json_out) {
    std::vector<trustgate::dataplane::CapturedPacket> packets;
    if (!trustgate::dataplane::read_pcap_file(capture_path, packets)) {
        std::cerr << "CaptureUnreadable: " << capture_path << "\n";
        return kExitOperational;
    }
    trustgate::dataplane::ThumbprintTable table;
    for (const auto& path : trust_files) {
        auto der = trustgate::crypto::load_certificate_file(path);
        if (!der) {
            std::cerr << "CertificateUnparseable: " << path << "\n";
            return kExitOperational;
        }
        table.install(trustgate::crypto::sha1(*der));
    }
    trustgate::dataplane::PipelineConfig cfg;
    cfg.opcua_port = opcua_port;
    auto report = trustgate::dataplane::replay_capture(packets, table, cfg);

    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : report.verdicts) {
        std::string decision =
            v.decision == trustgate::dataplane::Decision::Allow
                ? "ALLOW"
                : std::string("DROP(") + trustgate::dataplane::drop_reason_name(v.reason) + ")";
        std::cout << v.flow << " " << (v.thumbprint_hex.empty() ? "-" : v.thumbprint_hex) << " "
                  << decision << "\n";
        verdicts.push_back({{"flow", v.flow},
                            {"thumbprint", v.thumbprint_hex},
                            {"verdict", decision}});
    }
    std::cerr << "packets=" << report.packets_total << " opcua_tagged=" << report.packets_opcua
              << " other=" << report.non_opcua_packets << "\n";
    if (!json_out.empty()) {
        nlohmann::json doc = {{"capture", capture_path},
                              {"packets_total", report.packets_total},
                              {"packets_opcua", report.packets_opcua},
                              {"non_opcua_packets", report.non_opcua_packets},
                              {"verdicts", verdicts}};
        std::ofstream out(json_out);
        if (!out) {
            std::cerr << "cannot write " << json_out << "\n";
            return kExitOperational;
        }
        out << doc.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trustgate: in-path trust enforcement for OPC UA secure-channel establishment"};
    app.require_subcommand(1);

    // gateway run
    auto* gateway = app.add_subcommand("gateway", "gateway operations");
    gateway->require_subcommand(1);
    auto* gateway_run = gateway->add_subcommand("run", "run the gateway");
    std::string config_path;
    gateway_run->add_option("--config", config_path, "JSON config file")->required();

    // admin issue|revoke|pubkey
    auto* admin = app.add_subcommand("admin", "administrator operations");
    admin->require_subcommand(1);
    std::string cert_path, layer = "l1", control = "127.0.0.1:4890";
    int64_t expire_unix = 0;
    int64_t expire_days = 30;
    auto* issue = admin->add_subcommand("issue", "publish a certificate as trusted");
    issue->add_option("certificate", cert_path, "certificate file (DER or PEM)")->required();
    issue->add_option("--layer", layer, "ledger layer (l1|l2)");
    issue->add_option("--expire", expire_unix, "expiry as unix seconds");
    issue->add_option("--expire-days", expire_days, "expiry as days from now (default 30)");
    issue->add_option("--control", control, "gateway control endpoint HOST:PORT");
    auto* revoke = admin->add_subcommand("revoke", "revoke a trusted certificate");
    revoke->add_option("certificate", cert_path, "certificate file (DER or PEM)")->required();
    revoke->add_option("--layer", layer, "ledger layer (l1|l2)");
    revoke->add_option("--control", control, "gateway control endpoint HOST:PORT");
    auto* pubkey = admin->add_subcommand("pubkey", "print the administrator public key (hex)");

    // bench q1|q2
    auto* bench = app.add_subcommand("bench", "measurement campaigns");
    bench->require_subcommand(1);
    size_t q1_n = 1000;
    uint64_t seed = 42;
    std::string out_prefix = "bench_report";
    auto* q1 = bench->add_subcommand("q1", "in-path validation overhead");
    q1->add_option("-n", q1_n, "handshake attempts per arm (default 1000)");
    q1->add_option("--seed", seed, "random seed");
    q1->add_option("--out", out_prefix, "output path prefix (.json/.csv)");
    size_t q2_trials = 300;
    std::string q2_presets = "short,medium,long";
    std::string q2_sizes = "1024,4096,16384";
    std::string q2_layer = "l1";
    auto* q2 = bench->add_subcommand("q2", "ledger propagation delay");
    q2->add_option("--trials", q2_trials, "trials per cell (default 300)");
    q2->add_option("--presets", q2_presets, "comma-separated link presets");
    q2->add_option("--sizes", q2_sizes, "comma-separated payload sizes in bytes");
    q2->add_option("--layer", q2_layer, "ledger layer (l1|l2)");
    q2->add_option("--seed", seed, "random seed");
    q2->add_option("--out", out_prefix, "output path prefix (.json/.csv)");

    // replay
    auto* replay = app.add_subcommand("replay", "offline capture validation");
    std::string capture_path, replay_json;
    std::vector<std::string> trust_files;
    uint16_t replay_port = 4840;
    replay->add_option("capture", capture_path, "pcap file")->required();
    replay->add_option("--trust", trust_files, "trusted certificate file (repeatable)");
    replay->add_option("--opcua-port", replay_port, "OPC UA port (default 4840)");
    replay->add_option("--json", replay_json, "also write a JSON report");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_pattern("[%H:%M:%S] [%l] %v");

    if (gateway_run->parsed()) return cmd_gateway_run(config_path);

    if (pubkey->parsed()) {
        const char* key_path = std::getenv("TRUSTGATE_ADMIN_KEY");
        if (!key_path) {
            std::cerr << "TRUSTGATE_ADMIN_KEY is not set\n";
            return kExitConfig;
        }
        auto key = trustgate::crypto::SigningKey::load_pem_file(key_path);
        if (!key) {
            std::cerr << "cannot load key from " << key_path << "\n";
            return kExitConfig;
        }
        std::cout << trustgate::to_hex(BytesView(key->public_key().data(), 32)) << "\n";
        return kExitOk;
    }
    if (issue->parsed() || revoke->parsed()) {
        std::string verb = issue->parsed() ? "issue" : "revoke";
        if (verb == "issue" && expire_unix == 0) {
            expire_unix = static_cast<int64_t>(std::time(nullptr)) + expire_days * 86400;
        }
        if (layer != "l1" && layer != "l2") {
            std::cerr << "--layer must be l1 or l2\n";
            return kExitConfig;
        }
        return cmd_admin(verb, cert_path, layer, expire_unix, control);
    }
    if (q1->parsed()) {
        auto report = trustgate::bench::run_q1(q1_n, seed);
        if (!report.write_json(out_prefix + ".json") || !report.write_csv(out_prefix + ".csv")) {
            std::cerr << "cannot write report files\n";
            return kExitOperational;
        }
        std::cout << report.doc["deltas"].dump(2) << "\n";
        return kExitOk;
    }
    if (q2->parsed()) {
        auto split = [](const std::string& csv) {
            std::vector<std::string> out;
            std::string cur;
            for (char c : csv) {
                if (c == ',') {
                    if (!cur.empty()) out.push_back(cur);
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (!cur.empty()) out.push_back(cur);
            return out;
        };
        std::vector<size_t> sizes;
        for (const auto& s : split(q2_sizes)) sizes.push_back(std::stoul(s));
        if (q2_layer != "l1" && q2_layer != "l2") {
            std::cerr << "--layer must be l1 or l2\n";
            return kExitConfig;
        }
        auto report =
            trustgate::bench::run_q2(q2_trials, split(q2_presets), sizes, q2_layer, seed);
        if (!report.write_json(out_prefix + ".json") || !report.write_csv(out_prefix + ".csv")) {
            std::cerr << "cannot write report files\n";
            return kExitOperational;
        }
        std::cout << report.doc["cells"].dump(2) << "\n";
        return kExitOk;
    }
    if (replay->parsed()) {
        return cmd_replay(capture_path, trust_files, replay_port, replay_json);
    }
    return kExitConfig;
}
