#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace trustgate {

/// Deployment configuration, loaded from a JSON file with sections
/// gateway / ledger / controller. Unknown keys are ignored; invalid values
/// fail the load with a message.
struct GatewayConfig {
    struct Gateway {
        std::string listen_host = "127.0.0.1";
        uint16_t listen_port = 4840;
        std::string upstream_host = "127.0.0.1";
        uint16_t upstream_port = 4841;
        uint16_t opcua_port = 4840;
        bool validation_enabled = true;
        size_t table_capacity = 1024;
        size_t max_chunks = 100;
        std::string drop_mode = "silent";  // or "rst"
        uint16_t control_port = 4890;
        std::string metrics_path;
    } gateway;

    struct Ledger {
        std::string layer = "l1";  // or "l2"
        std::string preset = "short";
        uint64_t seed = 42;
        size_t confirmation_k = 2;
        std::vector<std::string> admin_pubkeys_hex;
    } ledger;

    struct Controller {
        std::string snapshot_path;
        int64_t sweep_interval_ms = 1000;
    } controller;
};

std::optional<GatewayConfig> load_config_file(const std::string& path, std::string& error);
std::optional<GatewayConfig> parse_config(const std::string& json_text, std::string& error);

}  // namespace trustgate
