#pragma once

#include <cstdint>
#include <optional>
#include <set>

#include "trustgate/bytes.hpp"
#include "trustgate/crypto.hpp"

namespace trustgate::ledger {

enum class ActionKind : uint8_t { Issue = 0, Revoke = 1 };

/// A certificate management action carried as ledger payload.
/// Canonical encoding: kind byte, expiry as signed 64-bit little-endian
/// (Issue only), certificate length as unsigned 32-bit little-endian, then
/// the DER bytes.
struct CertificateAction {
    ActionKind kind = ActionKind::Issue;
    Bytes certificate_der;
    int64_t expire_date_unix = 0;  // meaningful for Issue only

    bool operator==(const CertificateAction&) const = default;
};

Bytes encode_action(const CertificateAction& action);
std::optional<CertificateAction> decode_action(BytesView payload);

/// Administrator public keys authorized to mutate the trusted set.
struct AdminKeyring {
    std::set<crypto::PublicKey> authorized;

    bool contains(const crypto::PublicKey& key) const { return authorized.count(key) > 0; }
    bool empty() const { return authorized.empty(); }
};

}  // namespace trustgate::ledger
