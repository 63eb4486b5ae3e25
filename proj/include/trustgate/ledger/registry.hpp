#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/crypto.hpp"
#include "trustgate/ledger/action.hpp"
#include "trustgate/ledger/simnet.hpp"

namespace trustgate::ledger {

struct RegistryRecord {
    crypto::Sha1Digest thumbprint{};
    Bytes der;
    int64_t expire_date_unix = 0;
};

enum class RegistryStatus : uint8_t {
    Ok = 0,
    Unauthorized,
    ExpiredAtInsertion,
    EmptyCertificate,
};

const char* registry_status_name(RegistryStatus s);

struct RegistryEvent {
    uint64_t seq = 0;
    ActionKind kind = ActionKind::Issue;
    crypto::Sha1Digest thumbprint{};
    Bytes der;
    std::optional<int64_t> expire;
    crypto::PublicKey caller{};
    int64_t submit_vtime_ms = 0;
    int64_t deliver_vtime_ms = 0;
    bool noop = false;  // revocation of an absent certificate
};

class RegistrySubscription {
public:
    std::optional<RegistryEvent> poll();
    std::vector<RegistryEvent> drain();

private:
    friend class Registry;
    std::mutex mu_;
    std::deque<RegistryEvent> q_;
};

/// Contract-style registry of currently valid certificates. Mutations are
/// restricted to administrator keys; expired entries vanish as the clock
/// advances; every applied action is logged and notified to subscribers.
class Registry {
public:
    Registry(AdminKeyring keyring, std::function<int64_t()> clock_unix,
             DelayFn delay = {});

    RegistryStatus add_certificate(BytesView der, int64_t expire_unix,
                                   const crypto::SigningKey& caller);
    RegistryStatus revoke_certificate(BytesView der, const crypto::SigningKey& caller);

    /// Wallet-style entry points: the caller proves key possession with a
    /// signature over the canonical action encoding.
    RegistryStatus apply_signed(const CertificateAction& action,
                                const crypto::PublicKey& caller_pub,
                                const crypto::Signature& sig);

    /// Valid certificates at the current clock, ordered by thumbprint.
    std::vector<RegistryRecord> get_all_certificates() const;

    std::shared_ptr<RegistrySubscription> subscribe();

    struct LoggedAction {
        CertificateAction action;
        int64_t clock_at_apply = 0;
    };
    std::vector<LoggedAction> action_log() const;

    size_t valid_count() const;
    int64_t clock() const { return clock_(); }

private:
    RegistryStatus apply_unlocked(const CertificateAction& action,
                                  const crypto::PublicKey& caller);
    void prune_unlocked() const;
    void emit_unlocked(const RegistryEvent& ev);

    AdminKeyring keyring_;
    std::function<int64_t()> clock_;
    DelayFn delay_;

    mutable std::mutex mu_;
    mutable std::map<crypto::Sha1Digest, RegistryRecord> valid_;
    std::vector<LoggedAction> log_;
    uint64_t next_seq_ = 1;
    std::vector<std::shared_ptr<RegistrySubscription>> subs_;
};

}  // namespace trustgate::ledger
