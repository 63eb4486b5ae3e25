#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "trustgate/config.hpp"
#include "trustgate/controller/controller.hpp"
#include "trustgate/dataplane/proxy.hpp"
#include "trustgate/ledger/events.hpp"
#include "trustgate/ledger/registry.hpp"
#include "trustgate/ledger/tangle.hpp"

namespace trustgate {

/// Composition root for the running gateway: enforcement proxy, ledger layer,
/// controller loop and the local control socket used by the administrator
/// tooling.
class GatewayApp {
public:
    explicit GatewayApp(GatewayConfig cfg);
    ~GatewayApp();

    bool start(std::string& error);
    void stop();
    void wait();  // blocks until stop() is called from elsewhere

    uint16_t proxy_port() const;
    uint16_t control_port() const { return control_listener_.bound_port(); }

    dataplane::ThumbprintTable& table() { return *table_; }
    controller::Controller& gateway_controller() { return *controller_; }
    ledger::Tangle* tangle() { return tangle_.get(); }
    ledger::Registry* registry() { return registry_.get(); }
    dataplane::MetricsCollector& metrics() { return metrics_; }
    dataplane::VerdictLog& verdicts() { return verdicts_; }

private:
    void controller_loop();
    void control_loop();
    void handle_control_client(net::Socket sock);
    std::string handle_control_request(const std::string& request_json);
    void flush_metrics();

    GatewayConfig cfg_;
    std::shared_ptr<dataplane::ThumbprintTable> table_;
    dataplane::MetricsCollector metrics_;
    dataplane::VerdictLog verdicts_;
    std::unique_ptr<dataplane::GatewayProxy> proxy_;

    ledger::AdminKeyring keyring_;
    std::unique_ptr<ledger::Tangle> tangle_;
    std::unique_ptr<ledger::Registry> registry_;
    std::unique_ptr<ledger::CertificateEventSource> event_source_;
    std::unique_ptr<controller::Controller> controller_;

    net::TcpListener control_listener_;
    std::thread controller_thread_;
    std::thread control_thread_;
    std::atomic<bool> running_{false};
    std::atomic<bool> stopped_{false};
};

}  // namespace trustgate
