#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>

#include "trustgate/bytes.hpp"

namespace trustgate::crypto {

using Sha1Digest = std::array<uint8_t, 20>;
using Sha256Digest = std::array<uint8_t, 32>;
using PublicKey = std::array<uint8_t, 32>;   // raw Ed25519 public key
using Signature = std::array<uint8_t, 64>;   // raw Ed25519 signature

Sha1Digest sha1(BytesView data);
Sha256Digest sha256(BytesView data);

/// Ed25519 signing identity. Copyable; holds only the 32-byte seeds.
/// Default-constructed keys are all-zero placeholders.
class SigningKey {
public:
    SigningKey() = default;

    static SigningKey generate();
    static std::optional<SigningKey> from_seed(BytesView seed32);
    static std::optional<SigningKey> load_pem_file(const std::string& path);

    const PublicKey& public_key() const { return pub_; }
    BytesView seed() const { return BytesView(seed_.data(), seed_.size()); }

    Signature sign(BytesView message) const;
    bool save_pem_file(const std::string& path) const;

private:
    std::array<uint8_t, 32> seed_{};
    PublicKey pub_{};
};

bool verify(const PublicKey& pub, BytesView message, const Signature& sig);

/// Self-signed X.509 certificate over an Ed25519 key, DER-encoded.
/// The gateway treats the DER as an opaque identifier; the harness endpoints
/// additionally use the embedded public key for proof-of-possession checks.
struct CertificateIdentity {
    SigningKey key;
    Bytes der;
    Sha1Digest thumbprint;
};

/// `min_der_size` pads the certificate with an opaque extension until the
/// DER reaches at least that size (industrial certificates with chains and
/// rich extensions run to multiple kilobytes).
std::optional<CertificateIdentity> make_self_signed(const std::string& common_name,
                                                    int64_t not_after_unix = 0,
                                                    size_t min_der_size = 0);

/// Extracts the raw Ed25519 public key from a DER certificate, if the
/// certificate parses and carries one.
std::optional<PublicKey> certificate_public_key(BytesView der);

/// Accepts DER as-is; converts PEM ("-----BEGIN CERTIFICATE-----") to DER.
std::optional<Bytes> load_certificate_bytes(BytesView file_contents);
std::optional<Bytes> load_certificate_file(const std::string& path);

}  // namespace trustgate::crypto
