#pragma once

#include <memory>
#include <optional>

#include "trustgate/crypto.hpp"
#include "trustgate/ledger/registry.hpp"
#include "trustgate/ledger/tangle.hpp"

namespace trustgate::ledger {

/// Certificate event as consumed by the controller; both ledger layers
/// produce the same shape so the controller is layer-agnostic.
struct CertificateEvent {
    uint64_t seq = 0;
    ActionKind kind = ActionKind::Issue;
    Bytes der;
    crypto::Sha1Digest thumbprint{};
    std::optional<int64_t> expire;
    crypto::PublicKey sender{};
    int64_t submit_vtime_ms = 0;
    int64_t deliver_vtime_ms = 0;
};

class CertificateEventSource {
public:
    virtual ~CertificateEventSource() = default;
    virtual std::optional<CertificateEvent> poll() = 0;
};

/// Base-layer adapter: listens for "certificate"-tagged transactions,
/// discards submissions whose sender is not a known administrator, and
/// decodes the action payload.
class TangleCertSource : public CertificateEventSource {
public:
    TangleCertSource(Tangle& tangle, AdminKeyring keyring)
        : keyring_(std::move(keyring)), sub_(tangle.subscribe("certificate")) {}

    std::optional<CertificateEvent> poll() override;

    size_t unauthorized_dropped() const { return unauthorized_dropped_; }
    size_t malformed_dropped() const { return malformed_dropped_; }

private:
    AdminKeyring keyring_;
    std::shared_ptr<TangleSubscription> sub_;
    uint64_t next_seq_ = 1;
    size_t unauthorized_dropped_ = 0;
    size_t malformed_dropped_ = 0;
};

/// Contract-layer adapter over registry events.
class RegistryCertSource : public CertificateEventSource {
public:
    RegistryCertSource(Registry& registry, AdminKeyring keyring)
        : keyring_(std::move(keyring)), sub_(registry.subscribe()) {}

    std::optional<CertificateEvent> poll() override;

private:
    AdminKeyring keyring_;
    std::shared_ptr<RegistrySubscription> sub_;
};

}  // namespace trustgate::ledger
