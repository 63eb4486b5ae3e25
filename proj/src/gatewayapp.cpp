#include "trustgate/gatewayapp.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include <json.hpp>

namespace trustgate {

namespace dp = trustgate::dataplane;

namespace {

int64_t wall_unix_seconds() { return static_cast<int64_t>(std::time(nullptr)); }

bool read_control_frame(net::Socket& sock, std::string& out) {
    uint8_t len_buf[4];
    if (!sock.read_exact(len_buf, 4)) return false;
    uint32_t len = static_cast<uint32_t>(len_buf[0]) | (static_cast<uint32_t>(len_buf[1]) << 8) |
                   (static_cast<uint32_t>(len_buf[2]) << 16) |
                   (static_cast<uint32_t>(len_buf[3]) << 24);
    if (len > 16 * 1024 * 1024) return false;
    std::vector<uint8_t> buf(len);
    if (len > 0 && !sock.read_exact(buf.data(), len)) return false;
    out.assign(buf.begin(), buf.end());
    return true;
}

bool write_control_frame(net::Socket& sock, const std::string& payload) {
    ByteWriter w;
    w.write_u32_le(static_cast<uint32_t>(payload.size()));
    w.write_str(payload);
    return sock.write_all(w.data());
}

std::string hex_of(BytesView v) { return to_hex(v); }

}  // namespace

GatewayApp::GatewayApp(GatewayConfig cfg) : cfg_(std::move(cfg)) {}

GatewayApp::~GatewayApp() { stop(); }

bool GatewayApp::start(std::string& error) {
    table_ = std::make_shared<dp::ThumbprintTable>(cfg_.gateway.table_capacity);

    for (const auto& hex : cfg_.ledger.admin_pubkeys_hex) {
        auto raw = from_hex(hex);
        if (raw && raw->size() == 32) {
            crypto::PublicKey pub{};
            std::copy(raw->begin(), raw->end(), pub.begin());
            keyring_.authorized.insert(pub);
        }
    }

    auto preset = ledger::find_preset(cfg_.ledger.preset);
    if (!preset) {
        error = "unknown ledger preset";
        return false;
    }
    if (cfg_.ledger.layer == "l1") {
        ledger::TangleConfig tcfg;
        tcfg.confirmation_k = cfg_.ledger.confirmation_k;
        tcfg.seed = cfg_.ledger.seed;
        tcfg.delay = ledger::make_l1_delay(*preset, cfg_.ledger.seed);
        tangle_ = std::make_unique<ledger::Tangle>(tcfg);
        event_source_ = std::make_unique<ledger::TangleCertSource>(*tangle_, keyring_);
    } else {
        registry_ = std::make_unique<ledger::Registry>(
            keyring_, [] { return wall_unix_seconds(); },
            ledger::make_l2_delay(*preset, cfg_.ledger.seed));
        event_source_ = std::make_unique<ledger::RegistryCertSource>(*registry_, keyring_);
    }

    controller::ControllerOptions copts;
    copts.snapshot_path = cfg_.controller.snapshot_path;
    controller_ = std::make_unique<controller::Controller>(table_, keyring_, copts);
    if (!cfg_.controller.snapshot_path.empty()) {
        controller_->load_snapshot();  // absent snapshot: start fail-closed, empty
    }
    if (registry_) {
        controller_->sync_full(*registry_);
    }

    dp::ProxyOptions popts;
    popts.listen_host = cfg_.gateway.listen_host;
    popts.listen_port = cfg_.gateway.listen_port;
    popts.upstream_host = cfg_.gateway.upstream_host;
    popts.upstream_port = cfg_.gateway.upstream_port;
    popts.pipeline.opcua_port = cfg_.gateway.opcua_port;
    popts.pipeline.validation_enabled = cfg_.gateway.validation_enabled;
    popts.pipeline.max_chunks = cfg_.gateway.max_chunks;
    popts.pipeline.drop_mode =
        cfg_.gateway.drop_mode == "rst" ? dp::DropMode::Rst : dp::DropMode::Silent;
    proxy_ = std::make_unique<dp::GatewayProxy>(popts, table_, &metrics_, &verdicts_);
    if (!proxy_->start()) {
        error = "cannot bind proxy listener (port in use?)";
        return false;
    }
    if (!control_listener_.open(cfg_.gateway.listen_host, cfg_.gateway.control_port)) {
        error = "cannot bind control listener (port in use?)";
        proxy_->stop();
        return false;
    }

    running_ = true;
    controller_thread_ = std::thread([this] { controller_loop(); });
    control_thread_ = std::thread([this] { control_loop(); });
    spdlog::info("gateway up: proxy {}:{} -> {}:{}, control port {}, layer {}",
                 cfg_.gateway.listen_host, proxy_->bound_port(), cfg_.gateway.upstream_host,
                 cfg_.gateway.upstream_port, control_listener_.bound_port(), cfg_.ledger.layer);
    return true;
}

void GatewayApp::stop() {
    if (stopped_.exchange(true)) return;
    running_ = false;
    control_listener_.close();
    if (control_thread_.joinable()) control_thread_.join();
    if (controller_thread_.joinable()) controller_thread_.join();
    if (proxy_) proxy_->stop();
    flush_metrics();
}

void GatewayApp::wait() {
    while (running_) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

uint16_t GatewayApp::proxy_port() const { return proxy_ ? proxy_->bound_port() : 0; }

void GatewayApp::controller_loop() {
    auto last_sweep = std::chrono::steady_clock::now();
    while (running_) {
        bool worked = false;
        while (auto ev = event_source_->poll()) {
            controller_->on_event(*ev);
            worked = true;
        }
        if (controller_->pending_retry_count() > 0) controller_->drain_retries();

        auto now = std::chrono::steady_clock::now();
        if (now - last_sweep >= std::chrono::milliseconds(cfg_.controller.sweep_interval_ms)) {
            controller_->expire_sweep(wall_unix_seconds());
            if (tangle_) tangle_->confirm_step();
            last_sweep = now;
        }
        if (!worked) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

void GatewayApp::control_loop() {
    while (running_) {
        auto sock = control_listener_.accept_conn();
        if (!sock) break;
        handle_control_client(std::move(*sock));
    }
}

void GatewayApp::handle_control_client(net::Socket sock) {
    std::string request;
    while (read_control_frame(sock, request)) {
        std::string response = handle_control_request(request);
        if (!write_control_frame(sock, response)) break;
    }
}

std::string GatewayApp::handle_control_request(const std::string& request_json) {
    nlohmann::json req = nlohmann::json::parse(request_json, nullptr, false);
    auto fail = [](const std::string& message) {
        return nlohmann::json{{"ok", false}, {"error", message}}.dump();
    };
    if (req.is_discarded() || !req.contains("op")) return fail("bad request");
    const std::string op = req["op"].get<std::string>();

    if (op == "status") {
        return nlohmann::json{{"ok", true},
                              {"table_size", table_->size()},
                              {"table_generation", table_->generation()},
                              {"layer", cfg_.ledger.layer},
                              {"last_event_id", controller_->last_event_id()}}
            .dump();
    }
    if (op == "metrics") {
        auto proc = metrics_.processing_summary(true);
        auto deq = metrics_.dequeue_summary(true);
        return nlohmann::json{{"ok", true},
                              {"tagged_records", metrics_.tagged_count()},
                              {"processing_mean_ns", proc.mean},
                              {"dequeue_mean_ns", deq.mean}}
            .dump();
    }
    if (op == "tips") {
        if (!tangle_) return fail("not running the base ledger layer");
        auto [a, b] = tangle_->select_tips();
        return nlohmann::json{{"ok", true},
                              {"tips", {hex_of(BytesView(a.data(), a.size())),
                                        hex_of(BytesView(b.data(), b.size()))}}}
            .dump();
    }
    if (op == "submit_tx") {
        if (!tangle_) return fail("not running the base ledger layer");
        try {
            const auto& t = req.at("tx");
            ledger::LedgerTransaction tx;
            tx.tag = t.at("tag").get<std::string>();
            auto payload = from_base64(t.at("payload_b64").get<std::string>());
            auto pub = from_base64(t.at("pub_b64").get<std::string>());
            auto sig = from_base64(t.at("sig_b64").get<std::string>());
            auto ap0 = from_hex(t.at("approvals").at(0).get<std::string>());
            auto ap1 = from_hex(t.at("approvals").at(1).get<std::string>());
            if (!payload || !pub || pub->size() != 32 || !sig || sig->size() != 64 || !ap0 ||
                ap0->size() != 32 || !ap1 || ap1->size() != 32) {
                return fail("malformed transaction fields");
            }
            tx.payload = std::move(*payload);
            std::copy(pub->begin(), pub->end(), tx.sender_public_key.begin());
            std::copy(sig->begin(), sig->end(), tx.signature.begin());
            std::copy(ap0->begin(), ap0->end(), tx.approvals[0].begin());
            std::copy(ap1->begin(), ap1->end(), tx.approvals[1].begin());
            tx.timestamp_ms = t.at("timestamp_ms").get<int64_t>();
            tx.id = ledger::transaction_id(tx);

            auto status = tangle_->insert_transaction(tx);
            if (status != ledger::InsertStatus::Ok) {
                return fail(ledger::insert_status_name(status));
            }
            auto action = ledger::decode_action(tx.payload);
            std::string thumb_hex;
            if (action) {
                auto tp = crypto::sha1(action->certificate_der);
                thumb_hex = hex_of(BytesView(tp.data(), tp.size()));
            }
            return nlohmann::json{{"ok", true},
                                  {"txid", hex_of(BytesView(tx.id.data(), tx.id.size()))},
                                  {"thumbprint", thumb_hex}}
                .dump();
        } catch (const nlohmann::json::exception&) {
            return fail("malformed transaction");
        }
    }
    if (op == "l2_add" || op == "l2_revoke") {
        if (!registry_) return fail("not running the contract layer");
        try {
            auto cert = from_base64(req.at("cert_b64").get<std::string>());
            auto pub = from_base64(req.at("pub_b64").get<std::string>());
            auto sig = from_base64(req.at("sig_b64").get<std::string>());
            if (!cert || !pub || pub->size() != 32 || !sig || sig->size() != 64) {
                return fail("malformed request fields");
            }
            crypto::PublicKey caller{};
            std::copy(pub->begin(), pub->end(), caller.begin());
            crypto::Signature signature{};
            std::copy(sig->begin(), sig->end(), signature.begin());

            ledger::CertificateAction action;
            action.certificate_der = std::move(*cert);
            if (op == "l2_add") {
                action.kind = ledger::ActionKind::Issue;
                action.expire_date_unix = req.at("expire").get<int64_t>();
            } else {
                action.kind = ledger::ActionKind::Revoke;
            }
            auto status = registry_->apply_signed(action, caller, signature);
            if (status != ledger::RegistryStatus::Ok) {
                return fail(ledger::registry_status_name(status));
            }
            auto tp = crypto::sha1(action.certificate_der);
            return nlohmann::json{{"ok", true},
                                  {"thumbprint", hex_of(BytesView(tp.data(), tp.size()))}}
                .dump();
        } catch (const nlohmann::json::exception&) {
            return fail("malformed request");
        }
    }
    if (op == "shutdown") {
        running_ = false;
        return nlohmann::json{{"ok", true}}.dump();
    }
    return fail("unknown op \"" + op + "\"");
}

void GatewayApp::flush_metrics() {
    if (cfg_.gateway.metrics_path.empty()) return;
    auto proc_t = metrics_.processing_summary(true);
    auto proc_u = metrics_.processing_summary(false);
    auto deq_t = metrics_.dequeue_summary(true);
    nlohmann::json doc = {
        {"tagged_records", metrics_.tagged_count()},
        {"tagged_processing_mean_ns", proc_t.mean},
        {"tagged_processing_max_ns", proc_t.max},
        {"untagged_processing_mean_ns", proc_u.mean},
        {"tagged_dequeue_mean_ns", deq_t.mean},
    };
    std::ofstream out(cfg_.gateway.metrics_path);
    if (out) out << doc.dump(2) << '\n';
}

}  // namespace trustgate
