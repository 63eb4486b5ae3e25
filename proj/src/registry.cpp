#include "trustgate/ledger/registry.hpp"

#include <algorithm>

namespace trustgate::ledger {

const char* registry_status_name(RegistryStatus s) {
    switch (s) {
        case RegistryStatus::Ok: return "Ok";
        case RegistryStatus::Unauthorized: return "Unauthorized";
        case RegistryStatus::ExpiredAtInsertion: return "ExpiredAtInsertion";
        case RegistryStatus::EmptyCertificate: return "EmptyCertificate";
    }
    return "?";
}

std::optional<RegistryEvent> RegistrySubscription::poll() {
    std::lock_guard lock(mu_);
    if (q_.empty()) return std::nullopt;
    RegistryEvent ev = std::move(q_.front());
    q_.pop_front();
    return ev;
}

std::vector<RegistryEvent> RegistrySubscription::drain() {
    std::lock_guard lock(mu_);
    std::vector<RegistryEvent> out(q_.begin(), q_.end());
    q_.clear();
    return out;
}

Registry::Registry(AdminKeyring keyring, std::function<int64_t()> clock_unix, DelayFn delay)
    : keyring_(std::move(keyring)), clock_(std::move(clock_unix)), delay_(std::move(delay)) {}

RegistryStatus Registry::add_certificate(BytesView der, int64_t expire_unix,
                                         const crypto::SigningKey& caller) {
    CertificateAction action{ActionKind::Issue, Bytes(der.begin(), der.end()), expire_unix};
    std::lock_guard lock(mu_);
    return apply_unlocked(action, caller.public_key());
}

RegistryStatus Registry::revoke_certificate(BytesView der, const crypto::SigningKey& caller) {
    CertificateAction action{ActionKind::Revoke, Bytes(der.begin(), der.end()), 0};
    std::lock_guard lock(mu_);
    return apply_unlocked(action, caller.public_key());
}

RegistryStatus Registry::apply_signed(const CertificateAction& action,
                                      const crypto::PublicKey& caller_pub,
                                      const crypto::Signature& sig) {
    if (!crypto::verify(caller_pub, encode_action(action), sig)) {
        return RegistryStatus::Unauthorized;
    }
    std::lock_guard lock(mu_);
    return apply_unlocked(action, caller_pub);
}

RegistryStatus Registry::apply_unlocked(const CertificateAction& action,
                                        const crypto::PublicKey& caller) {
    if (!keyring_.contains(caller)) return RegistryStatus::Unauthorized;
    if (action.certificate_der.empty()) return RegistryStatus::EmptyCertificate;

    int64_t now = clock_();
    prune_unlocked();

    crypto::Sha1Digest tp = crypto::sha1(action.certificate_der);
    RegistryEvent ev;
    ev.seq = next_seq_++;
    ev.kind = action.kind;
    ev.thumbprint = tp;
    ev.der = action.certificate_der;
    ev.caller = caller;
    ev.submit_vtime_ms = now * 1000;
    ev.deliver_vtime_ms =
        ev.submit_vtime_ms + (delay_ ? delay_(action.certificate_der.size()) : 0);

    if (action.kind == ActionKind::Issue) {
        if (action.expire_date_unix < now) return RegistryStatus::ExpiredAtInsertion;
        valid_[tp] = RegistryRecord{tp, action.certificate_der, action.expire_date_unix};
        ev.expire = action.expire_date_unix;
    } else {
        auto it = valid_.find(tp);
        ev.noop = (it == valid_.end());
        if (it != valid_.end()) valid_.erase(it);
    }
    log_.push_back({action, now});
    emit_unlocked(ev);
    return RegistryStatus::Ok;
}

void Registry::prune_unlocked() const {
    int64_t now = clock_();
    for (auto it = valid_.begin(); it != valid_.end();) {
        if (it->second.expire_date_unix < now) {
            it = valid_.erase(it);
        } else {
            ++it;
        }
    }
}

void Registry::emit_unlocked(const RegistryEvent& ev) {
    for (auto& sub : subs_) {
        std::lock_guard qlock(sub->mu_);
        sub->q_.push_back(ev);
    }
}

std::vector<RegistryRecord> Registry::get_all_certificates() const {
    std::lock_guard lock(mu_);
    prune_unlocked();
    std::vector<RegistryRecord> out;
    out.reserve(valid_.size());
    for (const auto& [tp, rec] : valid_) out.push_back(rec);
    return out;  // map order = thumbprint order
}

std::shared_ptr<RegistrySubscription> Registry::subscribe() {
    std::lock_guard lock(mu_);
    auto sub = std::make_shared<RegistrySubscription>();
    subs_.push_back(sub);
    return sub;
}

std::vector<Registry::LoggedAction> Registry::action_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

size_t Registry::valid_count() const {
    std::lock_guard lock(mu_);
    prune_unlocked();
    return valid_.size();
}

}  // namespace trustgate::ledger
