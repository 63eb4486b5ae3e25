#include "trustgate/harness/endpoints.hpp"

#include <openssl/rand.h>

#include <chrono>
#include <cstring>

namespace trustgate::harness {

namespace opc = trustgate::opcua;

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Established: return "Established";
        case Outcome::RejectedAtGateway: return "RejectedAtGateway";
        case Outcome::Timeout: return "Timeout";
        case Outcome::ProtocolError: return "ProtocolError";
    }
    return "?";
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::GetEndpoints: return "GetEndpoints";
        case Phase::OpenSecureChannel: return "OpenSecureChannel";
        case Phase::CreateSession: return "CreateSession";
        case Phase::ActivateSession: return "ActivateSession";
    }
    return "?";
}

MessageStream::ReadStatus MessageStream::next_chunk(dataplane::CompleteChunk& out,
                                                    int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        if (ready_pos_ < ready_.size()) {
            out = std::move(ready_[ready_pos_++]);
            if (ready_pos_ == ready_.size()) {
                ready_.clear();
                ready_pos_ = 0;
            }
            return ReadStatus::Chunk;
        }
        if (chunker_.state() != dataplane::ChunkerState::Framing) return ReadStatus::Malformed;

        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) return ReadStatus::Timeout;
        int remaining =
            static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                                 .count()) +
            1;
        sock_.set_recv_timeout_ms(remaining);

        uint8_t buf[8192];
        long n = sock_.read_some(buf, sizeof(buf));
        if (n == 0) return ReadStatus::Eof;
        if (n == -2) return ReadStatus::Timeout;
        if (n < 0) return ReadStatus::Reset;
        auto chunks = chunker_.feed(BytesView(buf, static_cast<size_t>(n)));
        for (auto& c : chunks) ready_.push_back(std::move(c));
    }
}

namespace {

constexpr uint32_t kModeSignAndEncrypt = 3;
constexpr uint32_t kTokenCertificate = 2;
constexpr int kServerReadTimeoutMs = 500;

Bytes make_nonce() {
    Bytes nonce(32);
    RAND_bytes(nonce.data(), static_cast<int>(nonce.size()));
    return nonce;
}

Bytes pop_request_message(const Bytes& nonce, const std::string& policy) {
    Bytes m(nonce);
    m.insert(m.end(), policy.begin(), policy.end());
    const char* role = "REQ";
    m.insert(m.end(), role, role + 3);
    return m;
}

Bytes pop_response_message(const Bytes& nonce_c, const Bytes& nonce_s,
                           const std::string& policy) {
    Bytes m(nonce_c);
    m.insert(m.end(), nonce_s.begin(), nonce_s.end());
    m.insert(m.end(), policy.begin(), policy.end());
    const char* role = "RSP";
    m.insert(m.end(), role, role + 3);
    return m;
}

Bytes encode_pop_body(const Bytes& nonce, const crypto::Signature& sig) {
    ByteWriter w;
    w.write_bytes(nonce);
    w.write_i32_le(static_cast<int32_t>(sig.size()));
    w.write_bytes(BytesView(sig.data(), sig.size()));
    return w.take();
}

bool decode_pop_body(BytesView body, Bytes& nonce, crypto::Signature& sig) {
    ByteReader r(body);
    if (!r.read_bytes(32, nonce)) return false;
    int32_t sig_len = 0;
    if (!r.read_i32_le(sig_len) || sig_len != 64) return false;
    Bytes raw;
    if (!r.read_bytes(64, raw)) return false;
    std::copy(raw.begin(), raw.end(), sig.begin());
    return true;
}

bool body_has_marker(const Bytes& body, const char* marker) {
    size_t len = std::strlen(marker);
    return body.size() >= len && std::memcmp(body.data(), marker, len) == 0;
}

Bytes endpoint_descriptor_body(const crypto::CertificateIdentity& identity,
                               const std::string& policy) {
    ByteWriter w;
    w.write_i32_le(static_cast<int32_t>(identity.der.size()));
    w.write_bytes(identity.der);
    w.write_i32_le(static_cast<int32_t>(policy.size()));
    w.write_str(policy);
    w.write_u32_le(kModeSignAndEncrypt);
    w.write_u32_le(kTokenCertificate);
    return w.take();
}

struct EndpointDescriptor {
    Bytes server_der;
    std::string policy;
    uint32_t mode = 0;
    uint32_t token = 0;
};

bool parse_endpoint_descriptor(BytesView body, EndpointDescriptor& out) {
    ByteReader r(body);
    int32_t der_len = 0;
    if (!r.read_i32_le(der_len) || der_len <= 0) return false;
    if (!r.read_bytes(static_cast<size_t>(der_len), out.server_der)) return false;
    int32_t pol_len = 0;
    if (!r.read_i32_le(pol_len) || pol_len < 0) return false;
    Bytes pol;
    if (!r.read_bytes(static_cast<size_t>(pol_len), pol)) return false;
    out.policy.assign(pol.begin(), pol.end());
    return r.read_u32_le(out.mode) && r.read_u32_le(out.token);
}

}  // namespace

bool TestServer::start() {
    if (!listener_.open(opts_.host, opts_.port)) return false;
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void TestServer::stop() {
    if (!running_.exchange(false)) return;
    listener_.close();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(threads_mu_);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
}

void TestServer::accept_loop() {
    while (running_) {
        auto sock = listener_.accept_conn();
        if (!sock) break;
        sock->set_nodelay();
        std::lock_guard lock(threads_mu_);
        conn_threads_.emplace_back(
            [this, s = std::make_shared<net::Socket>(std::move(*sock))]() mutable {
                serve_connection(std::move(*s));
            });
    }
}

void TestServer::serve_connection(net::Socket sock) {
    MessageStream stream(std::move(sock));
    bool secured = false;
    Bytes secured_client_cert;
    uint32_t session_id = 0;
    uint32_t auth_token = 0;

    const crypto::SigningKey& pop_key =
        opts_.pop_key_override ? *opts_.pop_key_override : opts_.identity.key;

    while (running_) {
        dataplane::CompleteChunk chunk;
        auto status = stream.next_chunk(chunk, kServerReadTimeoutMs);
        if (status == MessageStream::ReadStatus::Timeout) continue;
        if (status != MessageStream::ReadStatus::Chunk) return;

        switch (chunk.type) {
            case opc::MessageType::Hel: {
                opc::HelloMessage hel;
                if (opc::decode_hello(chunk.bytes, hel) != opc::DecodeError::Ok) return;
                opc::AckMessage ack;
                ack.protocol_version = hel.protocol_version;
                ack.receive_buffer_size = hel.receive_buffer_size;
                ack.send_buffer_size = hel.send_buffer_size;
                if (!stream.send(opc::encode_ack(ack))) return;
                break;
            }
            case opc::MessageType::Opn: {
                opc::OpnMessage opn;
                if (opc::decode_opn(chunk.bytes, opn) != opc::DecodeError::Ok) return;
                const auto& sec = opn.security_header;
                std::string policy = sec.policy_uri_string();

                opc::OpnMessage resp;
                resp.secure_channel_id = next_channel_id_.fetch_add(1);
                resp.sequence_number = opn.sequence_number;
                resp.request_id = opn.request_id;

                if (!sec.sender_certificate) {
                    // Unsecured discovery channel.
                    if (policy != opc::kPolicyNone) return;
                    resp.security_header.security_policy_uri =
                        Bytes(policy.begin(), policy.end());
                    Bytes wire;
                    opc::encode_opn(resp, wire);
                    if (!stream.send(wire)) return;
                    break;
                }

                // Secured channel: check we are the intended receiver, then
                // verify the sender holds the certificate's key.
                if (sec.receiver_certificate_thumbprint) {
                    crypto::Sha1Digest own = opts_.identity.thumbprint;
                    if (!std::equal(own.begin(), own.end(),
                                    sec.receiver_certificate_thumbprint->begin())) {
                        opn_pop_failures_++;
                        stream.send(opc::encode_error({0x80130000u, "bad receiver thumbprint"}));
                        return;
                    }
                }
                Bytes nonce_c;
                crypto::Signature sig{};
                auto client_pub = crypto::certificate_public_key(*sec.sender_certificate);
                if (!decode_pop_body(opn.body, nonce_c, sig) || !client_pub ||
                    !crypto::verify(*client_pub, pop_request_message(nonce_c, policy), sig)) {
                    opn_pop_failures_++;
                    stream.send(opc::encode_error({0x80140000u, "certificate proof failed"}));
                    return;
                }

                secured = true;
                secured_client_cert = *sec.sender_certificate;
                Bytes nonce_s = make_nonce();
                crypto::Signature resp_sig =
                    pop_key.sign(pop_response_message(nonce_c, nonce_s, policy));
                resp.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
                resp.security_header.sender_certificate = opts_.identity.der;
                Bytes client_tp_bytes(20);
                crypto::Sha1Digest ctp = crypto::sha1(secured_client_cert);
                std::copy(ctp.begin(), ctp.end(), client_tp_bytes.begin());
                resp.security_header.receiver_certificate_thumbprint = client_tp_bytes;
                resp.body = encode_pop_body(nonce_s, resp_sig);
                Bytes wire;
                opc::encode_opn(resp, wire);
                if (!stream.send(wire)) return;
                break;
            }
            case opc::MessageType::Msg: {
                opc::MsgChunk msg;
                if (opc::decode_msg(chunk.bytes, msg) != opc::DecodeError::Ok) return;
                opc::MsgChunk resp;
                resp.secure_channel_id = msg.secure_channel_id;
                resp.token_id = msg.token_id;
                resp.sequence_number = msg.sequence_number;
                resp.request_id = msg.request_id;

                if (body_has_marker(msg.body, "GETEPTS")) {
                    resp.body = endpoint_descriptor_body(opts_.identity, opts_.policy);
                } else if (body_has_marker(msg.body, "CSESS")) {
                    if (!secured) {
                        stream.send(opc::encode_error({0x80250000u, "no secure channel"}));
                        return;
                    }
                    session_id = 7000 + next_channel_id_.load();
                    auth_token = session_id ^ 0x5A5A5A5Au;
                    ByteWriter w;
                    w.write_u32_le(session_id);
                    w.write_u32_le(auth_token);
                    resp.body = w.take();
                } else if (body_has_marker(msg.body, "ACTSESS")) {
                    ByteReader r(msg.body);
                    r.skip(7);
                    uint32_t token = 0;
                    if (!secured || !r.read_u32_le(token) || token != auth_token) {
                        stream.send(opc::encode_error({0x80260000u, "bad session token"}));
                        return;
                    }
                    resp.body = {'O', 'K'};
                    sessions_established_++;
                } else {
                    resp.body = msg.body;  // echo unknown services
                }
                if (!stream.send(opc::encode_msg(resp))) return;
                break;
            }
            case opc::MessageType::Clo:
                return;
            default:
                return;
        }
    }
}

namespace {

// Client-side classification. Stream failures while awaiting the secure
// channel response are attributed to in-path enforcement; everywhere else
// they are protocol errors.
Outcome classify_wait(MessageStream::ReadStatus status, bool awaiting_opn_response) {
    switch (status) {
        case MessageStream::ReadStatus::Timeout:
            return Outcome::Timeout;
        case MessageStream::ReadStatus::Eof:
        case MessageStream::ReadStatus::Reset:
            return awaiting_opn_response ? Outcome::RejectedAtGateway : Outcome::ProtocolError;
        default:
            return Outcome::ProtocolError;
    }
}

struct ClientChannel {
    std::unique_ptr<MessageStream> stream;
    uint32_t secure_channel_id = 0;
    uint32_t seq = 1;
};

bool open_transport(const ClientOptions& opts, ClientChannel& ch, int timeout_ms,
                    Outcome& fail_outcome) {
    auto sock = net::connect_tcp(opts.host, opts.port);
    if (!sock) {
        fail_outcome = Outcome::ProtocolError;
        return false;
    }
    ch.stream = std::make_unique<MessageStream>(std::move(*sock));

    opc::HelloMessage hel;
    hel.endpoint_url = "opc.tcp://" + opts.host + ":" + std::to_string(opts.port);
    if (!ch.stream->send(opc::encode_hello(hel))) {
        fail_outcome = Outcome::ProtocolError;
        return false;
    }
    dataplane::CompleteChunk chunk;
    auto status = ch.stream->next_chunk(chunk, timeout_ms);
    if (status != MessageStream::ReadStatus::Chunk ||
        chunk.type != opc::MessageType::Ack) {
        fail_outcome = classify_wait(status, false);
        return false;
    }
    return true;
}

}  // namespace

HandshakeResult perform_handshake(const ClientOptions& opts) {
    HandshakeResult result;
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](Outcome outcome, Phase phase) {
        result.outcome = outcome;
        result.phase_reached = phase;
        result.duration_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
        return result;
    };

    const crypto::SigningKey& pop_key =
        opts.pop_key_override ? *opts.pop_key_override : opts.identity.key;

    crypto::Sha1Digest server_thumbprint{};
    if (opts.do_discovery) {
        ClientChannel ch;
        Outcome fail = Outcome::ProtocolError;
        if (!open_transport(opts, ch, opts.read_timeout_ms, fail)) {
            return finish(fail, Phase::GetEndpoints);
        }
        opc::OpnMessage opn;
        std::string none_policy = opc::kPolicyNone;
        opn.security_header.security_policy_uri = Bytes(none_policy.begin(), none_policy.end());
        opn.sequence_number = ch.seq++;
        opn.request_id = opn.sequence_number;
        Bytes wire;
        opc::encode_opn(opn, wire);
        if (!ch.stream->send(wire)) return finish(Outcome::ProtocolError, Phase::GetEndpoints);

        dataplane::CompleteChunk chunk;
        auto status = ch.stream->next_chunk(chunk, opts.read_timeout_ms);
        if (status != MessageStream::ReadStatus::Chunk ||
            chunk.type != opc::MessageType::Opn) {
            return finish(classify_wait(status, true), Phase::GetEndpoints);
        }
        opc::OpnMessage opn_resp;
        if (opc::decode_opn(chunk.bytes, opn_resp) != opc::DecodeError::Ok) {
            return finish(Outcome::ProtocolError, Phase::GetEndpoints);
        }
        ch.secure_channel_id = opn_resp.secure_channel_id;

        opc::MsgChunk req;
        req.secure_channel_id = ch.secure_channel_id;
        req.sequence_number = ch.seq++;
        req.request_id = req.sequence_number;
        req.body = {'G', 'E', 'T', 'E', 'P', 'T', 'S'};
        if (!ch.stream->send(opc::encode_msg(req))) {
            return finish(Outcome::ProtocolError, Phase::GetEndpoints);
        }
        status = ch.stream->next_chunk(chunk, opts.read_timeout_ms);
        if (status != MessageStream::ReadStatus::Chunk ||
            chunk.type != opc::MessageType::Msg) {
            return finish(classify_wait(status, false), Phase::GetEndpoints);
        }
        opc::MsgChunk msg_resp;
        EndpointDescriptor descriptor;
        if (opc::decode_msg(chunk.bytes, msg_resp) != opc::DecodeError::Ok ||
            !parse_endpoint_descriptor(msg_resp.body, descriptor)) {
            return finish(Outcome::ProtocolError, Phase::GetEndpoints);
        }
        server_thumbprint = crypto::sha1(descriptor.server_der);

        opc::MsgChunk clo;
        clo.type = opc::MessageType::Clo;
        clo.secure_channel_id = ch.secure_channel_id;
        clo.sequence_number = ch.seq++;
        clo.request_id = clo.sequence_number;
        ch.stream->send(opc::encode_msg(clo));
    } else {
        if (!opts.pinned_server_thumbprint) {
            return finish(Outcome::ProtocolError, Phase::GetEndpoints);
        }
        server_thumbprint = *opts.pinned_server_thumbprint;
    }

    // Secured channel.
    ClientChannel ch;
    Outcome fail = Outcome::ProtocolError;
    if (!open_transport(opts, ch, opts.read_timeout_ms, fail)) {
        return finish(fail, Phase::OpenSecureChannel);
    }

    for (size_t round = 0; round <= opts.renewals; round++) {
        Bytes nonce_c = make_nonce();
        opc::OpnMessage opn;
        opn.secure_channel_id = ch.secure_channel_id;
        opn.security_header.security_policy_uri = Bytes(opts.policy.begin(), opts.policy.end());
        opn.security_header.sender_certificate = opts.identity.der;
        Bytes tp_bytes(server_thumbprint.begin(), server_thumbprint.end());
        opn.security_header.receiver_certificate_thumbprint = tp_bytes;
        opn.sequence_number = ch.seq++;
        opn.request_id = opn.sequence_number;
        crypto::Signature sig = pop_key.sign(pop_request_message(nonce_c, opts.policy));
        opn.body = encode_pop_body(nonce_c, sig);
        Bytes wire;
        opc::encode_opn(opn, wire);
        if (!ch.stream->send(wire)) {
            return finish(Outcome::RejectedAtGateway, Phase::OpenSecureChannel);
        }

        dataplane::CompleteChunk chunk;
        auto status = ch.stream->next_chunk(chunk, opts.read_timeout_ms);
        if (status != MessageStream::ReadStatus::Chunk) {
            return finish(classify_wait(status, true), Phase::OpenSecureChannel);
        }
        if (chunk.type == opc::MessageType::Err) {
            return finish(Outcome::ProtocolError, Phase::OpenSecureChannel);
        }
        opc::OpnMessage opn_resp;
        if (chunk.type != opc::MessageType::Opn ||
            opc::decode_opn(chunk.bytes, opn_resp) != opc::DecodeError::Ok) {
            return finish(Outcome::ProtocolError, Phase::OpenSecureChannel);
        }
        const auto& sec = opn_resp.security_header;
        if (!sec.sender_certificate) {
            return finish(Outcome::ProtocolError, Phase::OpenSecureChannel);
        }
        // Certificate checks the endpoint still owns: the responding
        // certificate must be the one discovery promised, and the responder
        // must prove possession of its key.
        crypto::Sha1Digest resp_tp = crypto::sha1(*sec.sender_certificate);
        if (!std::equal(resp_tp.begin(), resp_tp.end(), server_thumbprint.begin())) {
            return finish(Outcome::ProtocolError, Phase::OpenSecureChannel);
        }
        Bytes nonce_s;
        crypto::Signature resp_sig{};
        auto server_pub = crypto::certificate_public_key(*sec.sender_certificate);
        if (!decode_pop_body(opn_resp.body, nonce_s, resp_sig) || !server_pub ||
            !crypto::verify(*server_pub,
                            pop_response_message(nonce_c, nonce_s, opts.policy), resp_sig)) {
            return finish(Outcome::ProtocolError, Phase::OpenSecureChannel);
        }
        ch.secure_channel_id = opn_resp.secure_channel_id;
    }

    // Session creation and activation ride the secured channel.
    opc::MsgChunk csess;
    csess.secure_channel_id = ch.secure_channel_id;
    csess.sequence_number = ch.seq++;
    csess.request_id = csess.sequence_number;
    csess.body = {'C', 'S', 'E', 'S', 'S'};
    if (!ch.stream->send(opc::encode_msg(csess))) {
        return finish(Outcome::ProtocolError, Phase::CreateSession);
    }
    dataplane::CompleteChunk chunk;
    auto status = ch.stream->next_chunk(chunk, opts.read_timeout_ms);
    opc::MsgChunk csess_resp;
    if (status != MessageStream::ReadStatus::Chunk || chunk.type != opc::MessageType::Msg ||
        opc::decode_msg(chunk.bytes, csess_resp) != opc::DecodeError::Ok) {
        return finish(classify_wait(status, false), Phase::CreateSession);
    }
    ByteReader r(csess_resp.body);
    uint32_t session_id = 0, auth_token = 0;
    if (!r.read_u32_le(session_id) || !r.read_u32_le(auth_token)) {
        return finish(Outcome::ProtocolError, Phase::CreateSession);
    }

    opc::MsgChunk act;
    act.secure_channel_id = ch.secure_channel_id;
    act.token_id = auth_token;
    act.sequence_number = ch.seq++;
    act.request_id = act.sequence_number;
    act.body = {'A', 'C', 'T', 'S', 'E', 'S', 'S'};
    ByteWriter tw;
    tw.write_u32_le(auth_token);
    Bytes token_bytes = tw.take();
    act.body.insert(act.body.end(), token_bytes.begin(), token_bytes.end());
    if (!ch.stream->send(opc::encode_msg(act))) {
        return finish(Outcome::ProtocolError, Phase::ActivateSession);
    }
    status = ch.stream->next_chunk(chunk, opts.read_timeout_ms);
    opc::MsgChunk act_resp;
    if (status != MessageStream::ReadStatus::Chunk || chunk.type != opc::MessageType::Msg ||
        opc::decode_msg(chunk.bytes, act_resp) != opc::DecodeError::Ok ||
        !body_has_marker(act_resp.body, "OK")) {
        return finish(classify_wait(status, false), Phase::ActivateSession);
    }

    opc::MsgChunk clo;
    clo.type = opc::MessageType::Clo;
    clo.secure_channel_id = ch.secure_channel_id;
    clo.sequence_number = ch.seq++;
    clo.request_id = clo.sequence_number;
    ch.stream->send(opc::encode_msg(clo));

    return finish(Outcome::Established, Phase::ActivateSession);
}

}  // namespace trustgate::harness
