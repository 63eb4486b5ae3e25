#pragma once

#include <array>
#include <optional>
#include <string>

#include "trustgate/bytes.hpp"

namespace trustgate::opcua {

// OPC UA TCP binary transport subset: HEL/ACK/OPN/MSG/CLO/ERR framing and
// the asymmetric security header carried by OPN chunks. All wire integers
// are little-endian.

enum class MessageType : uint8_t { Hel, Ack, Opn, Msg, Clo, Err };

enum class ChunkType : uint8_t { Final = 'F', Intermediate = 'C', Abort = 'A' };

enum class DecodeError : uint8_t {
    Ok = 0,
    TruncatedInput,
    UnknownMessageType,
    MalformedByteString,
    NotOpn,
    NotFinalChunk,
    SizeMismatch,
    ThumbprintLengthInvalid,
};

const char* decode_error_name(DecodeError e);

constexpr size_t kHeaderSize = 8;

// OPN wire overhead around the certificate bytes when the policy string is
// empty and the 20-byte thumbprint is present: 8 header + 4 channel id +
// 4 policy length + 4 certificate length + 4 + 20 thumbprint + 4 sequence +
// 4 request id.
constexpr size_t kOpnFixedOverhead = 52;

struct MessageHeader {
    MessageType msg_type = MessageType::Msg;
    ChunkType chunk_type = ChunkType::Final;
    uint32_t message_size = 0;

    bool operator==(const MessageHeader&) const = default;
};

/// OPC UA ByteString: length-prefixed bytes, length -1 encodes null.
using ByteStringField = std::optional<Bytes>;

struct AsymmetricSecurityHeader {
    ByteStringField security_policy_uri;              // UTF-8 URI bytes
    ByteStringField sender_certificate;               // DER or null
    ByteStringField receiver_certificate_thumbprint;  // exactly 20 bytes or null

    std::string policy_uri_string() const {
        if (!security_policy_uri) return {};
        return std::string(security_policy_uri->begin(), security_policy_uri->end());
    }

    bool operator==(const AsymmetricSecurityHeader&) const = default;
};

struct OpnMessage {
    MessageHeader header{MessageType::Opn, ChunkType::Final, 0};
    uint32_t secure_channel_id = 0;
    AsymmetricSecurityHeader security_header;
    uint32_t sequence_number = 0;
    uint32_t request_id = 0;
    Bytes body;

    bool operator==(const OpnMessage&) const = default;
};

struct HelloMessage {
    uint32_t protocol_version = 0;
    uint32_t receive_buffer_size = 65536;
    uint32_t send_buffer_size = 65536;
    uint32_t max_message_size = 0;
    uint32_t max_chunk_count = 0;
    std::string endpoint_url;

    bool operator==(const HelloMessage&) const = default;
};

struct AckMessage {
    uint32_t protocol_version = 0;
    uint32_t receive_buffer_size = 65536;
    uint32_t send_buffer_size = 65536;
    uint32_t max_message_size = 0;
    uint32_t max_chunk_count = 0;

    bool operator==(const AckMessage&) const = default;
};

struct ErrorMessage {
    uint32_t error_code = 0;
    std::string reason;

    bool operator==(const ErrorMessage&) const = default;
};

/// MSG and CLO chunks share this shape; the gateway treats bodies as opaque.
struct MsgChunk {
    MessageType type = MessageType::Msg;
    ChunkType chunk_type = ChunkType::Final;
    uint32_t secure_channel_id = 0;
    uint32_t token_id = 0;
    uint32_t sequence_number = 0;
    uint32_t request_id = 0;
    Bytes body;

    bool operator==(const MsgChunk&) const = default;
};

// Recommended security policy URIs plus None for discovery channels.
inline constexpr const char* kPolicyNone = "http://opcfoundation.org/UA/SecurityPolicy#None";
inline constexpr const char* kPolicyBasic256Sha256 =
    "http://opcfoundation.org/UA/SecurityPolicy#Basic256Sha256";
inline constexpr const char* kPolicyAes128Sha256RsaOaep =
    "http://opcfoundation.org/UA/SecurityPolicy#Aes128_Sha256_RsaOaep";
inline constexpr const char* kPolicyAes256Sha256RsaPss =
    "http://opcfoundation.org/UA/SecurityPolicy#Aes256_Sha256_RsaPss";

bool is_recommended_policy(const std::string& uri);

DecodeError decode_message_header(BytesView bytes, MessageHeader& out);

DecodeError decode_opn(BytesView chunk, OpnMessage& out);
DecodeError encode_opn(const OpnMessage& msg, Bytes& out);

DecodeError decode_hello(BytesView chunk, HelloMessage& out);
Bytes encode_hello(const HelloMessage& msg);

DecodeError decode_ack(BytesView chunk, AckMessage& out);
Bytes encode_ack(const AckMessage& msg);

DecodeError decode_error(BytesView chunk, ErrorMessage& out);
Bytes encode_error(const ErrorMessage& msg);

DecodeError decode_msg(BytesView chunk, MsgChunk& out);
Bytes encode_msg(const MsgChunk& msg);

}  // namespace trustgate::opcua
