#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/dataplane/chunker.hpp"
#include "trustgate/dataplane/pipeline.hpp"

namespace trustgate::dataplane {

using MacAddr = std::array<uint8_t, 6>;

constexpr uint8_t kTcpFin = 0x01;
constexpr uint8_t kTcpSyn = 0x02;
constexpr uint8_t kTcpRst = 0x04;
constexpr uint8_t kTcpAck = 0x10;

struct ParsedPacket {
    MacAddr eth_src{};
    MacAddr eth_dst{};
    uint16_t ethertype = 0;

    bool has_ipv4 = false;
    uint32_t ip_src = 0;
    uint32_t ip_dst = 0;
    uint8_t ip_protocol = 0;
    uint16_t ip_total_length = 0;

    bool has_tcp = false;
    uint16_t tcp_src_port = 0;
    uint16_t tcp_dst_port = 0;
    uint32_t tcp_seq = 0;
    uint8_t tcp_flags = 0;
    size_t payload_offset = 0;
    size_t payload_length = 0;

    bool opcua_tag = false;
};

enum class ParseStatus : uint8_t {
    Ok = 0,
    TruncatedFrame,
    NotIpv4,  // forwarded untouched, never an error for the gateway
};

ParseStatus parse_frame(BytesView frame, ParsedPacket& out);

struct FlowKey {
    uint32_t src = 0;
    uint32_t dst = 0;
    uint16_t sport = 0;
    uint16_t dport = 0;

    bool operator==(const FlowKey&) const = default;
    bool operator<(const FlowKey& o) const {
        return std::tie(src, dst, sport, dport) < std::tie(o.src, o.dst, o.sport, o.dport);
    }
    std::string to_string() const;
};

enum class ReassemblyStatus : uint8_t {
    Ok = 0,
    ReassemblyOverflow,
    OutOfOrderGapTimeout,
};

/// Orders TCP segments per flow and feeds the in-order byte stream to a
/// chunker. Out-of-order segments are stashed until the gap fills; a gap that
/// outlives the stash bound times the flow out.
class FlowTracker {
public:
    static constexpr size_t kMaxGapSegments = 64;

    explicit FlowTracker(uint16_t opcua_port = 4840, size_t max_chunks = CertChunks::kDefaultMaxChunks)
        : opcua_port_(opcua_port), max_chunks_(max_chunks) {}

    /// Consumes one parsed packet (with its frame for payload access).
    /// Returns completed chunks in stream order and sets pkt.opcua_tag when
    /// the packet's payload intersects an OPN chunk on an OPC UA flow.
    ReassemblyStatus reassemble(ParsedPacket& pkt, BytesView frame,
                                std::vector<CompleteChunk>& out_chunks);

    bool flow_dropped(const FlowKey& key) const;
    size_t tracked_flows() const { return flows_.size(); }

private:
    struct StreamState {
        bool have_seq = false;
        uint32_t expected_seq = 0;
        StreamChunker chunker;
        std::map<uint32_t, Bytes> pending;  // out-of-order stash
        size_t pending_bytes = 0;
        bool dropped = false;

        explicit StreamState(size_t max_chunks) : chunker(max_chunks) {}
    };

    uint16_t opcua_port_;
    size_t max_chunks_;
    std::map<FlowKey, StreamState> flows_;
};

// ---- Classic pcap container (Ethernet link type) ----

struct CapturedPacket {
    uint64_t ts_usec = 0;
    Bytes frame;
};

bool read_pcap_file(const std::string& path, std::vector<CapturedPacket>& out);
bool write_pcap_file(const std::string& path, const std::vector<CapturedPacket>& packets);

/// Builds an Ethernet/IPv4/TCP frame around a payload; checksums are zeroed,
/// which the parser side does not verify.
Bytes build_tcp_frame(uint32_t ip_src, uint32_t ip_dst, uint16_t sport, uint16_t dport,
                      uint32_t seq, uint8_t flags, BytesView payload);

struct ReplayReport {
    size_t packets_total = 0;
    size_t packets_opcua = 0;
    size_t non_opcua_packets = 0;
    std::vector<VerdictRecord> verdicts;
    std::vector<MetricsRecord> metrics;
};

/// Offline validation path: parses every frame in a capture, reassembles
/// flows touching the OPC UA port, and emits one verdict per OPN chunk.
ReplayReport replay_capture(const std::vector<CapturedPacket>& packets,
                            const ThumbprintTable& table, const PipelineConfig& cfg);

}  // namespace trustgate::dataplane
