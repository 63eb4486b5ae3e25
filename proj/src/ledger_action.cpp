#include "trustgate/ledger/action.hpp"

namespace trustgate::ledger {

Bytes encode_action(const CertificateAction& action) {
    ByteWriter w;
    w.write_u8(static_cast<uint8_t>(action.kind));
    if (action.kind == ActionKind::Issue) {
        uint64_t e = static_cast<uint64_t>(action.expire_date_unix);
        w.write_u32_le(static_cast<uint32_t>(e & 0xFFFFFFFFu));
        w.write_u32_le(static_cast<uint32_t>(e >> 32));
    }
    w.write_u32_le(static_cast<uint32_t>(action.certificate_der.size()));
    w.write_bytes(action.certificate_der);
    return w.take();
}

std::optional<CertificateAction> decode_action(BytesView payload) {
    ByteReader r(payload);
    uint8_t kind = 0;
    if (!r.read_u8(kind) || kind > 1) return std::nullopt;
    CertificateAction action;
    action.kind = static_cast<ActionKind>(kind);
    if (action.kind == ActionKind::Issue) {
        uint32_t lo = 0, hi = 0;
        if (!r.read_u32_le(lo) || !r.read_u32_le(hi)) return std::nullopt;
        action.expire_date_unix =
            static_cast<int64_t>((static_cast<uint64_t>(hi) << 32) | lo);
    }
    uint32_t len = 0;
    if (!r.read_u32_le(len)) return std::nullopt;
    if (!r.read_bytes(len, action.certificate_der)) return std::nullopt;
    if (r.remaining() != 0) return std::nullopt;
    return action;
}

}  // namespace trustgate::ledger
