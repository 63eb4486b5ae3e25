#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/crypto.hpp"
#include "trustgate/ledger/action.hpp"
#include "trustgate/ledger/simnet.hpp"

namespace trustgate::ledger {

using TxId = std::array<uint8_t, 32>;

/// A signed, tagged transaction in the DAG ledger. Every non-genesis
/// transaction approves exactly two prior transactions; the signature covers
/// tag, payload, approvals and timestamp.
struct LedgerTransaction {
    TxId id{};
    std::string tag = "certificate";
    Bytes payload;
    crypto::PublicKey sender_public_key{};
    crypto::Signature signature{};
    std::array<TxId, 2> approvals{};
    int64_t timestamp_ms = 0;

    bool operator==(const LedgerTransaction&) const = default;
};

Bytes transaction_signing_bytes(const std::string& tag, const Bytes& payload,
                                const std::array<TxId, 2>& approvals, int64_t timestamp_ms);
TxId transaction_id(const LedgerTransaction& tx);

struct TangleDelivery {
    LedgerTransaction tx;
    bool confirmed = false;
    int64_t submit_vtime_ms = 0;
    int64_t deliver_vtime_ms = 0;
};

/// Per-subscriber delivery queue; every transaction matching the tag is
/// delivered exactly once, in submission order.
class TangleSubscription {
public:
    std::optional<TangleDelivery> poll();
    std::vector<TangleDelivery> drain();

private:
    friend class Tangle;
    std::mutex mu_;
    std::deque<TangleDelivery> q_;
    std::string tag_filter_;
};

struct TangleConfig {
    size_t confirmation_k = 2;
    uint64_t seed = 42;
    DelayFn delay;  // empty: zero simulated delay
};

enum class InsertStatus : uint8_t {
    Ok = 0,
    EmptyPayload,
    UnknownApproval,
    BadSignature,
    DuplicateId,
};

const char* insert_status_name(InsertStatus s);

/// Desk-scale DAG ledger: submissions approve two uniformly chosen tips, a
/// transaction is confirmed once enough later transactions approve it
/// transitively, and subscribers receive tagged transactions with simulated
/// propagation stamps on a virtual clock.
class Tangle {
public:
    explicit Tangle(TangleConfig cfg = {});

    /// Builds, signs and inserts a certificate-action transaction.
    TxId submit(const CertificateAction& action, const crypto::SigningKey& key,
                const std::string& tag = "certificate");

    /// Builds and signs a transaction for an arbitrary payload.
    TxId submit_raw(const std::string& tag, Bytes payload, const crypto::SigningKey& key);

    /// Inserts an externally built transaction (wallet-style submission).
    InsertStatus insert_transaction(const LedgerTransaction& tx);

    /// Two uniformly random tips; both equal when a single tip exists.
    std::pair<TxId, TxId> select_tips();

    /// Marks transactions with at least k distinct transitive approvers as
    /// confirmed. Returns the newly confirmed ids; the set only grows.
    std::vector<TxId> confirm_step();
    bool is_confirmed(const TxId& id) const;

    static bool verify_sender(const LedgerTransaction& tx, const AdminKeyring& keyring);

    std::shared_ptr<TangleSubscription> subscribe(const std::string& tag);

    size_t size() const;
    size_t tip_count() const;
    TxId genesis_id() const;
    std::optional<LedgerTransaction> get(const TxId& id) const;
    std::vector<TxId> all_ids() const;
    bool is_acyclic() const;
    size_t transitive_approver_count(const TxId& id) const;
    int64_t now_vtime_ms() const;

    bool export_log(const std::string& path) const;
    bool import_log(const std::string& path);

private:
    void insert_unlocked(const LedgerTransaction& tx);
    void deliver_unlocked(const LedgerTransaction& tx);
    size_t approver_count_unlocked(const TxId& id) const;

    mutable std::mutex mu_;
    std::map<TxId, LedgerTransaction> transactions_;
    std::vector<TxId> order_;
    std::set<TxId> tips_;
    std::set<TxId> confirmed_;
    std::map<TxId, std::vector<TxId>> approvers_;  // reverse edges
    TxId genesis_id_{};
    int64_t vclock_ms_ = 0;
    std::mt19937_64 rng_;
    size_t k_;
    DelayFn delay_;
    std::vector<std::shared_ptr<TangleSubscription>> subs_;
};

}  // namespace trustgate::ledger
