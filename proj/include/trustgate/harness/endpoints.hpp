#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "trustgate/crypto.hpp"
#include "trustgate/dataplane/chunker.hpp"
#include "trustgate/net.hpp"
#include "trustgate/opcua/codec.hpp"

namespace trustgate::harness {

enum class Outcome : uint8_t { Established, RejectedAtGateway, Timeout, ProtocolError };
enum class Phase : uint8_t { GetEndpoints, OpenSecureChannel, CreateSession, ActivateSession };

const char* outcome_name(Outcome o);
const char* phase_name(Phase p);

struct HandshakeResult {
    Outcome outcome = Outcome::ProtocolError;
    Phase phase_reached = Phase::GetEndpoints;
    double duration_ms = 0.0;
};

/// Framed message transport over a socket; turns the byte stream back into
/// complete chunks with a read deadline.
class MessageStream {
public:
    enum class ReadStatus : uint8_t { Chunk, Eof, Reset, Timeout, Malformed };

    explicit MessageStream(net::Socket sock) : sock_(std::move(sock)) {}

    ReadStatus next_chunk(dataplane::CompleteChunk& out, int timeout_ms);
    bool send(BytesView bytes) { return sock_.write_all(bytes); }
    net::Socket& socket() { return sock_; }

private:
    net::Socket sock_;
    dataplane::StreamChunker chunker_;
    std::vector<dataplane::CompleteChunk> ready_;
    size_t ready_pos_ = 0;
};

struct ServerOptions {
    crypto::CertificateIdentity identity;
    std::string policy = opcua::kPolicyBasic256Sha256;
    std::string host = "127.0.0.1";
    uint16_t port = 0;
    /// When set, channel-proof signatures use this key instead of the
    /// certificate's own key (models an attacker replaying stolen
    /// certificate bytes without the matching private key).
    std::optional<crypto::SigningKey> pop_key_override;
};

/// Minimal server endpoint: answers discovery on an unsecured channel and
/// drives the secured channel establishment with a key-possession proof,
/// then session creation and activation at framing level.
class TestServer {
public:
    explicit TestServer(ServerOptions opts) : opts_(std::move(opts)) {}
    ~TestServer() { stop(); }

    bool start();
    void stop();

    uint16_t bound_port() const { return listener_.bound_port(); }
    size_t sessions_established() const { return sessions_established_.load(); }
    size_t opn_pop_failures() const { return opn_pop_failures_.load(); }

private:
    void accept_loop();
    void serve_connection(net::Socket sock);

    ServerOptions opts_;
    net::TcpListener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};
    std::atomic<size_t> sessions_established_{0};
    std::atomic<size_t> opn_pop_failures_{0};
    std::atomic<uint32_t> next_channel_id_{100};
    std::mutex threads_mu_;
    std::vector<std::thread> conn_threads_;
};

struct ClientOptions {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
    crypto::CertificateIdentity identity;
    std::string policy = opcua::kPolicyBasic256Sha256;
    int read_timeout_ms = 2000;
    bool do_discovery = true;
    /// Required when discovery is skipped; otherwise learned from the
    /// endpoint descriptor.
    std::optional<crypto::Sha1Digest> pinned_server_thumbprint;
    std::optional<crypto::SigningKey> pop_key_override;
    size_t renewals = 0;  // extra secure-channel renewals on the same connection
};

/// Drives the four-step establishment through whatever sits between the
/// endpoints and classifies the outcome from the client's point of view.
HandshakeResult perform_handshake(const ClientOptions& opts);

}  // namespace trustgate::harness
