#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace trustgate::harness {

/// One attack-scenario run: counts per outcome plus a machine-readable
/// report document (config, per-attempt outcomes, timing percentiles).
struct ScenarioOutcome {
    std::string name;
    size_t attempts = 0;
    size_t established = 0;
    size_t rejected = 0;
    size_t timeout = 0;
    size_t protocol_error = 0;
    nlohmann::json report;

    bool write_report(const std::string& path) const;
};

/// Rogue endpoint with a self-generated certificate absent from the trusted
/// set. `issue_rogue_cert` runs the control arm where the same certificate
/// has been issued, flipping the expected result.
ScenarioOutcome run_rogue_server(size_t n, bool issue_rogue_cert = false);
ScenarioOutcome run_rogue_client(size_t n);

/// Interception actor that terminates both directions. Active mode swaps in
/// its own certificates and key proofs; passive mode relays bytes verbatim.
ScenarioOutcome run_middleperson(size_t n, bool passive);

/// Rogue server replaying a trusted certificate's bytes without the matching
/// private key; the in-path check passes, the endpoint proof cannot.
ScenarioOutcome run_replay(size_t n);

}  // namespace trustgate::harness
