#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "trustgate/crypto.hpp"
#include "trustgate/dataplane/table.hpp"
#include "trustgate/ledger/events.hpp"
#include "trustgate/ledger/registry.hpp"

namespace trustgate::controller {

/// Certificate identifier used throughout the gateway: the 160-bit digest of
/// the DER encoding, matching the 20-byte thumbprint field in the transport's
/// security header. Empty input has no thumbprint.
std::optional<crypto::Sha1Digest> hash_thumbprint(BytesView der);

struct ControllerOptions {
    std::string snapshot_path;  // empty disables persistence
};

struct SyncReport {
    size_t installs = 0;
    size_t removals = 0;
};

struct KnownRecord {
    Bytes der;
    std::optional<int64_t> expire;
};

/// Bridges the ledger event stream to the data plane table: installs on
/// issue, removes on revoke, reconciles on startup, sweeps expiries. All
/// table mutations flow through this one component.
class Controller {
public:
    Controller(std::shared_ptr<dataplane::ThumbprintTable> table, ledger::AdminKeyring keyring,
               ControllerOptions opts = {});

    /// Applies one ledger event. Events from unknown senders are logged and
    /// ignored; a full table queues the install for retry.
    void on_event(const ledger::CertificateEvent& event);

    /// Makes the table mirror the registry's valid set exactly.
    SyncReport sync_full(ledger::Registry& registry);

    /// Removes every known record that expired before the given time.
    size_t expire_sweep(int64_t clock_unix);

    /// Re-attempts queued installs; returns how many were applied.
    size_t drain_retries();

    bool save_snapshot() const;
    bool load_snapshot();

    const std::map<crypto::Sha1Digest, KnownRecord>& known() const { return known_; }
    uint64_t last_event_id() const { return last_event_id_; }
    size_t pending_retry_count() const { return pending_retries_.size(); }

private:
    std::shared_ptr<dataplane::ThumbprintTable> table_;
    ledger::AdminKeyring keyring_;
    ControllerOptions opts_;

    std::map<crypto::Sha1Digest, KnownRecord> known_;
    uint64_t last_event_id_ = 0;
    std::deque<ledger::CertificateEvent> pending_retries_;
};

}  // namespace trustgate::controller
