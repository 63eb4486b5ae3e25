#include "trustgate/dataplane/extract.hpp"

#include "trustgate/opcua/codec.hpp"

namespace trustgate::dataplane {

const char* extract_status_name(ExtractStatus s) {
    switch (s) {
        case ExtractStatus::Ok: return "Ok";
        case ExtractStatus::NullCertificate: return "NullCertificate";
        case ExtractStatus::ZeroLengthCertificate: return "ZeroLengthCertificate";
        case ExtractStatus::CertificateTooLong: return "CertificateTooLong";
        case ExtractStatus::MalformedOpn: return "MalformedOpn";
    }
    return "?";
}

uint32_t swap_length_bytes(uint32_t extracted_be) {
    return ((extracted_be & 0x000000FFu) << 24) | ((extracted_be & 0x0000FF00u) << 8) |
           ((extracted_be & 0x00FF0000u) >> 8) | ((extracted_be & 0xFF000000u) >> 24);
}

ExtractResult extract_certificate(BytesView opn_chunk, size_t max_chunks) {
    ExtractResult result;
    result.cert.max_chunks = max_chunks;

    opcua::MessageHeader hdr;
    if (opcua::decode_message_header(opn_chunk, hdr) != opcua::DecodeError::Ok ||
        hdr.msg_type != opcua::MessageType::Opn ||
        hdr.chunk_type != opcua::ChunkType::Final || hdr.message_size != opn_chunk.size()) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }

    ByteReader r(opn_chunk.subspan(opcua::kHeaderSize));
    uint32_t secure_channel_id = 0;
    if (!r.read_u32_le(secure_channel_id)) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }

    // Security policy URI: length-prefixed, skipped by the parser.
    int32_t policy_len = 0;
    if (!r.read_i32_le(policy_len)) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }
    if (policy_len > 0 && !r.skip(static_cast<size_t>(policy_len))) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }

    // The length field arrives through a big-endian extraction primitive and
    // is byte-swapped back to the transport's little-endian value.
    uint32_t raw_be = 0;
    if (!r.read_u32_be(raw_be)) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }
    uint32_t cert_bytes = swap_length_bytes(raw_be);
    result.cert.declared_length = cert_bytes;

    if (static_cast<int32_t>(cert_bytes) == -1) {
        result.status = ExtractStatus::NullCertificate;
        result.cert.declared_length = 0;
    } else if (cert_bytes == 0) {
        result.status = ExtractStatus::ZeroLengthCertificate;
        return result;
    } else if (cert_bytes > CertChunks::kBlockSize * max_chunks) {
        result.status = ExtractStatus::CertificateTooLong;
        return result;
    } else {
        // 256-byte blocks while more than 255 bytes remain, then the rest.
        uint32_t remaining = cert_bytes;
        while (remaining > 255) {
            Bytes block;
            if (!r.read_bytes(CertChunks::kBlockSize, block)) {
                result.status = ExtractStatus::MalformedOpn;
                return result;
            }
            result.cert.chunks.push_back(std::move(block));
            remaining -= CertChunks::kBlockSize;
        }
        if (remaining > 0) {
            Bytes block;
            if (!r.read_bytes(remaining, block)) {
                result.status = ExtractStatus::MalformedOpn;
                return result;
            }
            result.cert.chunks.push_back(std::move(block));
        }
        result.status = ExtractStatus::Ok;
    }

    // Final parsing step: the receiver certificate thumbprint field.
    int32_t thumb_len = 0;
    if (!r.read_i32_le(thumb_len)) {
        result.status = ExtractStatus::MalformedOpn;
        return result;
    }
    if (thumb_len >= 0) {
        if (thumb_len != 20) {
            result.status = ExtractStatus::MalformedOpn;
            return result;
        }
        BytesView view;
        if (!r.view_bytes(20, view)) {
            result.status = ExtractStatus::MalformedOpn;
            return result;
        }
        Thumbprint tp{};
        std::copy(view.begin(), view.end(), tp.begin());
        result.receiver_thumbprint = tp;
    }
    return result;
}

}  // namespace trustgate::dataplane
