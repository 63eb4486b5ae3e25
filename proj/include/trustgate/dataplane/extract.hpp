#pragma once

#include <optional>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/dataplane/table.hpp"

namespace trustgate::dataplane {

/// Certificate bytes as consumed by the emulated switch parser: fixed
/// 256-byte blocks while more than 255 bytes remain, then one final block
/// with the remainder.
struct CertChunks {
    static constexpr size_t kBlockSize = 256;
    static constexpr size_t kDefaultMaxChunks = 100;

    std::vector<Bytes> chunks;
    uint32_t declared_length = 0;
    size_t max_chunks = kDefaultMaxChunks;

    Bytes concatenated() const {
        Bytes out;
        out.reserve(declared_length);
        for (const auto& c : chunks) out.insert(out.end(), c.begin(), c.end());
        return out;
    }
};

enum class ExtractStatus : uint8_t {
    Ok = 0,
    NullCertificate,       // length field -1: no certificate material carried
    ZeroLengthCertificate,
    CertificateTooLong,
    MalformedOpn,
};

const char* extract_status_name(ExtractStatus s);

struct ExtractResult {
    ExtractStatus status = ExtractStatus::MalformedOpn;
    CertChunks cert;
    std::optional<Thumbprint> receiver_thumbprint;
};

/// Reorders a 32-bit length field that was extracted big-endian from the
/// wire: given wire bytes b0,b1,b2,b3 composed as b0<<24|b1<<16|b2<<8|b3,
/// returns b3<<24|b2<<16|b1<<8|b0, the little-endian value the transport
/// declared.
uint32_t swap_length_bytes(uint32_t extracted_be);

/// Walks a complete OPN chunk the way the switch parser does: skips to the
/// certificate length field, byte-swaps it, then consumes the certificate in
/// 256-byte blocks and finally the receiver thumbprint field. The chunk must
/// start with a valid OPN header.
ExtractResult extract_certificate(BytesView opn_chunk,
                                  size_t max_chunks = CertChunks::kDefaultMaxChunks);

}  // namespace trustgate::dataplane
