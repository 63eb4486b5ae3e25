#include "trustgate/opcua/codec.hpp"

namespace trustgate::opcua {

namespace {

constexpr int32_t kNullLength = -1;

bool msg_type_from_code(const char* code, MessageType& out) {
    auto eq3 = [code](const char* s) {
        return code[0] == s[0] && code[1] == s[1] && code[2] == s[2];
    };
    if (eq3("HEL")) { out = MessageType::Hel; return true; }
    if (eq3("ACK")) { out = MessageType::Ack; return true; }
    if (eq3("OPN")) { out = MessageType::Opn; return true; }
    if (eq3("MSG")) { out = MessageType::Msg; return true; }
    if (eq3("CLO")) { out = MessageType::Clo; return true; }
    if (eq3("ERR")) { out = MessageType::Err; return true; }
    return false;
}

const char* msg_type_code(MessageType t) {
    switch (t) {
        case MessageType::Hel: return "HEL";
        case MessageType::Ack: return "ACK";
        case MessageType::Opn: return "OPN";
        case MessageType::Msg: return "MSG";
        case MessageType::Clo: return "CLO";
        case MessageType::Err: return "ERR";
    }
    return "???";
}

DecodeError read_byte_string(ByteReader& r, ByteStringField& out) {
    int32_t len = 0;
    if (!r.read_i32_le(len)) return DecodeError::TruncatedInput;
    if (len == kNullLength) {
        out = std::nullopt;
        return DecodeError::Ok;
    }
    if (len < 0) return DecodeError::MalformedByteString;
    Bytes data;
    if (!r.read_bytes(static_cast<size_t>(len), data)) {
        return DecodeError::MalformedByteString;
    }
    out = std::move(data);
    return DecodeError::Ok;
}

void write_byte_string(ByteWriter& w, const ByteStringField& field) {
    if (!field) {
        w.write_i32_le(kNullLength);
        return;
    }
    w.write_i32_le(static_cast<int32_t>(field->size()));
    w.write_bytes(*field);
}

void write_string(ByteWriter& w, const std::string& s) {
    w.write_i32_le(static_cast<int32_t>(s.size()));
    w.write_str(s);
}

DecodeError read_string(ByteReader& r, std::string& out) {
    int32_t len = 0;
    if (!r.read_i32_le(len)) return DecodeError::TruncatedInput;
    if (len == kNullLength) {
        out.clear();
        return DecodeError::Ok;
    }
    if (len < 0) return DecodeError::MalformedByteString;
    Bytes data;
    if (!r.read_bytes(static_cast<size_t>(len), data)) {
        return DecodeError::MalformedByteString;
    }
    out.assign(data.begin(), data.end());
    return DecodeError::Ok;
}

// Shared preamble: validate header against the actual chunk length.
DecodeError check_chunk(BytesView chunk, MessageHeader& hdr) {
    DecodeError err = decode_message_header(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.message_size < kHeaderSize) return DecodeError::SizeMismatch;
    if (hdr.message_size != chunk.size()) return DecodeError::TruncatedInput;
    return DecodeError::Ok;
}

Bytes finish_chunk(MessageType type, ChunkType chunk_type, ByteWriter&& w) {
    Bytes body = w.take();
    ByteWriter out;
    out.write_str(msg_type_code(type));
    out.write_u8(static_cast<uint8_t>(chunk_type));
    out.write_u32_le(static_cast<uint32_t>(kHeaderSize + body.size()));
    out.write_bytes(body);
    return out.take();
}

}  // namespace

const char* decode_error_name(DecodeError e) {
    switch (e) {
        case DecodeError::Ok: return "Ok";
        case DecodeError::TruncatedInput: return "TruncatedInput";
        case DecodeError::UnknownMessageType: return "UnknownMessageType";
        case DecodeError::MalformedByteString: return "MalformedByteString";
        case DecodeError::NotOpn: return "NotOpn";
        case DecodeError::NotFinalChunk: return "NotFinalChunk";
        case DecodeError::SizeMismatch: return "SizeMismatch";
        case DecodeError::ThumbprintLengthInvalid: return "ThumbprintLengthInvalid";
    }
    return "?";
}

bool is_recommended_policy(const std::string& uri) {
    return uri == kPolicyBasic256Sha256 || uri == kPolicyAes128Sha256RsaOaep ||
           uri == kPolicyAes256Sha256RsaPss;
}

DecodeError decode_message_header(BytesView bytes, MessageHeader& out) {
    if (bytes.size() < kHeaderSize) return DecodeError::TruncatedInput;
    char code[3] = {static_cast<char>(bytes[0]), static_cast<char>(bytes[1]),
                    static_cast<char>(bytes[2])};
    if (!msg_type_from_code(code, out.msg_type)) return DecodeError::UnknownMessageType;
    out.chunk_type = static_cast<ChunkType>(bytes[3]);
    ByteReader r(bytes.subspan(4, 4));
    r.read_u32_le(out.message_size);
    return DecodeError::Ok;
}

DecodeError decode_opn(BytesView chunk, OpnMessage& out) {
    MessageHeader hdr;
    DecodeError err = check_chunk(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.msg_type != MessageType::Opn) return DecodeError::NotOpn;
    if (hdr.chunk_type != ChunkType::Final) return DecodeError::NotFinalChunk;

    ByteReader r(chunk.subspan(kHeaderSize));
    out.header = hdr;
    if (!r.read_u32_le(out.secure_channel_id)) return DecodeError::TruncatedInput;

    err = read_byte_string(r, out.security_header.security_policy_uri);
    if (err != DecodeError::Ok) return err;
    err = read_byte_string(r, out.security_header.sender_certificate);
    if (err != DecodeError::Ok) return err;
    err = read_byte_string(r, out.security_header.receiver_certificate_thumbprint);
    if (err != DecodeError::Ok) return err;
    const auto& thumb = out.security_header.receiver_certificate_thumbprint;
    if (thumb && thumb->size() != 20) return DecodeError::MalformedByteString;

    if (!r.read_u32_le(out.sequence_number)) return DecodeError::TruncatedInput;
    if (!r.read_u32_le(out.request_id)) return DecodeError::TruncatedInput;
    out.body.clear();
    r.read_bytes(r.remaining(), out.body);
    return DecodeError::Ok;
}

DecodeError encode_opn(const OpnMessage& msg, Bytes& out) {
    const auto& thumb = msg.security_header.receiver_certificate_thumbprint;
    if (thumb && thumb->size() != 20) return DecodeError::ThumbprintLengthInvalid;

    ByteWriter w;
    w.write_u32_le(msg.secure_channel_id);
    write_byte_string(w, msg.security_header.security_policy_uri);
    write_byte_string(w, msg.security_header.sender_certificate);
    write_byte_string(w, thumb);
    w.write_u32_le(msg.sequence_number);
    w.write_u32_le(msg.request_id);
    w.write_bytes(msg.body);
    out = finish_chunk(MessageType::Opn, ChunkType::Final, std::move(w));
    return DecodeError::Ok;
}

DecodeError decode_hello(BytesView chunk, HelloMessage& out) {
    MessageHeader hdr;
    DecodeError err = check_chunk(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.msg_type != MessageType::Hel) return DecodeError::UnknownMessageType;
    ByteReader r(chunk.subspan(kHeaderSize));
    if (!r.read_u32_le(out.protocol_version) || !r.read_u32_le(out.receive_buffer_size) ||
        !r.read_u32_le(out.send_buffer_size) || !r.read_u32_le(out.max_message_size) ||
        !r.read_u32_le(out.max_chunk_count)) {
        return DecodeError::TruncatedInput;
    }
    return read_string(r, out.endpoint_url);
}

Bytes encode_hello(const HelloMessage& msg) {
    ByteWriter w;
    w.write_u32_le(msg.protocol_version);
    w.write_u32_le(msg.receive_buffer_size);
    w.write_u32_le(msg.send_buffer_size);
    w.write_u32_le(msg.max_message_size);
    w.write_u32_le(msg.max_chunk_count);
    write_string(w, msg.endpoint_url);
    return finish_chunk(MessageType::Hel, ChunkType::Final, std::move(w));
}

DecodeError decode_ack(BytesView chunk, AckMessage& out) {
    MessageHeader hdr;
    DecodeError err = check_chunk(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.msg_type != MessageType::Ack) return DecodeError::UnknownMessageType;
    ByteReader r(chunk.subspan(kHeaderSize));
    if (!r.read_u32_le(out.protocol_version) || !r.read_u32_le(out.receive_buffer_size) ||
        !r.read_u32_le(out.send_buffer_size) || !r.read_u32_le(out.max_message_size) ||
        !r.read_u32_le(out.max_chunk_count)) {
        return DecodeError::TruncatedInput;
    }
    return DecodeError::Ok;
}

Bytes encode_ack(const AckMessage& msg) {
    ByteWriter w;
    w.write_u32_le(msg.protocol_version);
    w.write_u32_le(msg.receive_buffer_size);
    w.write_u32_le(msg.send_buffer_size);
    w.write_u32_le(msg.max_message_size);
    w.write_u32_le(msg.max_chunk_count);
    return finish_chunk(MessageType::Ack, ChunkType::Final, std::move(w));
}

DecodeError decode_error(BytesView chunk, ErrorMessage& out) {
    MessageHeader hdr;
    DecodeError err = check_chunk(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.msg_type != MessageType::Err) return DecodeError::UnknownMessageType;
    ByteReader r(chunk.subspan(kHeaderSize));
    if (!r.read_u32_le(out.error_code)) return DecodeError::TruncatedInput;
    return read_string(r, out.reason);
}

Bytes encode_error(const ErrorMessage& msg) {
    ByteWriter w;
    w.write_u32_le(msg.error_code);
    write_string(w, msg.reason);
    return finish_chunk(MessageType::Err, ChunkType::Final, std::move(w));
}

DecodeError decode_msg(BytesView chunk, MsgChunk& out) {
    MessageHeader hdr;
    DecodeError err = check_chunk(chunk, hdr);
    if (err != DecodeError::Ok) return err;
    if (hdr.msg_type != MessageType::Msg && hdr.msg_type != MessageType::Clo) {
        return DecodeError::UnknownMessageType;
    }
    out.type = hdr.msg_type;
    out.chunk_type = hdr.chunk_type;
    ByteReader r(chunk.subspan(kHeaderSize));
    if (!r.read_u32_le(out.secure_channel_id) || !r.read_u32_le(out.token_id) ||
        !r.read_u32_le(out.sequence_number) || !r.read_u32_le(out.request_id)) {
        return DecodeError::TruncatedInput;
    }
    out.body.clear();
    r.read_bytes(r.remaining(), out.body);
    return DecodeError::Ok;
}

Bytes encode_msg(const MsgChunk& msg) {
    ByteWriter w;
    w.write_u32_le(msg.secure_channel_id);
    w.write_u32_le(msg.token_id);
    w.write_u32_le(msg.sequence_number);
    w.write_u32_le(msg.request_id);
    w.write_bytes(msg.body);
    return finish_chunk(msg.type, msg.chunk_type, std::move(w));
}

}  // namespace trustgate::opcua
