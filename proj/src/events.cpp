#include "trustgate/ledger/events.hpp"

namespace trustgate::ledger {

std::optional<CertificateEvent> TangleCertSource::poll() {
    while (auto delivery = sub_->poll()) {
        const LedgerTransaction& tx = delivery->tx;
        if (!Tangle::verify_sender(tx, keyring_)) {
            unauthorized_dropped_++;
            continue;
        }
        auto action = decode_action(tx.payload);
        if (!action) {
            malformed_dropped_++;
            continue;
        }
        CertificateEvent ev;
        ev.seq = next_seq_++;
        ev.kind = action->kind;
        ev.der = std::move(action->certificate_der);
        ev.thumbprint = crypto::sha1(ev.der);
        if (action->kind == ActionKind::Issue) ev.expire = action->expire_date_unix;
        ev.sender = tx.sender_public_key;
        ev.submit_vtime_ms = delivery->submit_vtime_ms;
        ev.deliver_vtime_ms = delivery->deliver_vtime_ms;
        return ev;
    }
    return std::nullopt;
}

std::optional<CertificateEvent> RegistryCertSource::poll() {
    while (auto reg_ev = sub_->poll()) {
        if (!keyring_.contains(reg_ev->caller)) continue;  // registry enforces; re-check
        CertificateEvent ev;
        ev.seq = reg_ev->seq;
        ev.kind = reg_ev->kind;
        ev.der = std::move(reg_ev->der);
        ev.thumbprint = reg_ev->thumbprint;
        ev.expire = reg_ev->expire;
        ev.sender = reg_ev->caller;
        ev.submit_vtime_ms = reg_ev->submit_vtime_ms;
        ev.deliver_vtime_ms = reg_ev->deliver_vtime_ms;
        return ev;
    }
    return std::nullopt;
}

}  // namespace trustgate::ledger
