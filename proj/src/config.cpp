#include "trustgate/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trustgate/bytes.hpp"
#include "trustgate/ledger/simnet.hpp"

namespace trustgate {

namespace {

bool port_ok(int64_t v) { return v >= 0 && v <= 65535; }

}  // namespace

std::optional<GatewayConfig> parse_config(const std::string& json_text, std::string& error) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) {
        error = "config is not valid JSON";
        return std::nullopt;
    }
    GatewayConfig cfg;
    try {
        if (doc.contains("gateway")) {
            const auto& g = doc["gateway"];
            cfg.gateway.listen_host = g.value("listen_host", cfg.gateway.listen_host);
            int64_t lp = g.value("listen_port", static_cast<int64_t>(cfg.gateway.listen_port));
            int64_t up = g.value("upstream_port", static_cast<int64_t>(cfg.gateway.upstream_port));
            int64_t op = g.value("opcua_port", static_cast<int64_t>(cfg.gateway.opcua_port));
            int64_t cp = g.value("control_port", static_cast<int64_t>(cfg.gateway.control_port));
            if (!port_ok(lp) || !port_ok(up) || !port_ok(op) || !port_ok(cp)) {
                error = "port out of range";
                return std::nullopt;
            }
            cfg.gateway.listen_port = static_cast<uint16_t>(lp);
            cfg.gateway.upstream_host = g.value("upstream_host", cfg.gateway.upstream_host);
            cfg.gateway.upstream_port = static_cast<uint16_t>(up);
            cfg.gateway.opcua_port = static_cast<uint16_t>(op);
            cfg.gateway.control_port = static_cast<uint16_t>(cp);
            cfg.gateway.validation_enabled =
                g.value("validation_enabled", cfg.gateway.validation_enabled);
            cfg.gateway.table_capacity = g.value("table_capacity", cfg.gateway.table_capacity);
            cfg.gateway.max_chunks = g.value("max_chunks", cfg.gateway.max_chunks);
            cfg.gateway.drop_mode = g.value("drop_mode", cfg.gateway.drop_mode);
            cfg.gateway.metrics_path = g.value("metrics_path", cfg.gateway.metrics_path);
            if (cfg.gateway.drop_mode != "silent" && cfg.gateway.drop_mode != "rst") {
                error = "drop_mode must be \"silent\" or \"rst\"";
                return std::nullopt;
            }
            if (cfg.gateway.table_capacity == 0 || cfg.gateway.max_chunks == 0) {
                error = "table_capacity and max_chunks must be positive";
                return std::nullopt;
            }
        }
        if (doc.contains("ledger")) {
            const auto& l = doc["ledger"];
            cfg.ledger.layer = l.value("layer", cfg.ledger.layer);
            cfg.ledger.preset = l.value("preset", cfg.ledger.preset);
            cfg.ledger.seed = l.value("seed", cfg.ledger.seed);
            cfg.ledger.confirmation_k = l.value("confirmation_k", cfg.ledger.confirmation_k);
            if (l.contains("admin_pubkeys")) {
                for (const auto& k : l["admin_pubkeys"]) {
                    cfg.ledger.admin_pubkeys_hex.push_back(k.get<std::string>());
                }
            }
            if (cfg.ledger.layer != "l1" && cfg.ledger.layer != "l2") {
                error = "ledger.layer must be \"l1\" or \"l2\"";
                return std::nullopt;
            }
            if (!ledger::find_preset(cfg.ledger.preset)) {
                error = "unknown ledger.preset \"" + cfg.ledger.preset + "\"";
                return std::nullopt;
            }
            for (const auto& hex : cfg.ledger.admin_pubkeys_hex) {
                auto raw = from_hex(hex);
                if (!raw || raw->size() != 32) {
                    error = "admin_pubkeys entries must be 64 hex characters";
                    return std::nullopt;
                }
            }
        }
        if (doc.contains("controller")) {
            const auto& c = doc["controller"];
            cfg.controller.snapshot_path = c.value("snapshot_path", cfg.controller.snapshot_path);
            cfg.controller.sweep_interval_ms =
                c.value("sweep_interval_ms", cfg.controller.sweep_interval_ms);
        }
    } catch (const nlohmann::json::exception& e) {
        error = std::string("config field type error: ") + e.what();
        return std::nullopt;
    }
    return cfg;
}

std::optional<GatewayConfig> load_config_file(const std::string& path, std::string& error) {
    std::ifstream in(path);
    if (!in) {
        error = "cannot open config file " + path;
        return std::nullopt;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), error);
}

}  // namespace trustgate
