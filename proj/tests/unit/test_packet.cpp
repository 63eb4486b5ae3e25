#include <doctest.h>

#include <cstdio>

#include "trustgate/crypto.hpp"
#include "trustgate/dataplane/packet.hpp"
#include "trustgate/opcua/codec.hpp"

using namespace trustgate;
using namespace trustgate::dataplane;

namespace {

constexpr uint32_t kClientIp = 0x0A000001;  // 10.0.0.1
constexpr uint32_t kServerIp = 0x0A000002;  // 10.0.0.2

Bytes opn_wire(const Bytes& cert) {
    opcua::OpnMessage m;
    std::string policy = opcua::kPolicyBasic256Sha256;
    m.security_header.security_policy_uri = Bytes(policy.begin(), policy.end());
    m.security_header.sender_certificate = cert;
    Bytes wire;
    REQUIRE(opcua::encode_opn(m, wire) == opcua::DecodeError::Ok);
    return wire;
}

}  // namespace

TEST_CASE("frame parse extracts tcp fields and payload range") {
    Bytes payload = {'O', 'P', 'N'};
    Bytes frame = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, 1000, kTcpAck, payload);
    ParsedPacket pkt;
    REQUIRE(parse_frame(frame, pkt) == ParseStatus::Ok);
    CHECK(pkt.has_ipv4);
    CHECK(pkt.has_tcp);
    CHECK(pkt.ip_src == kClientIp);
    CHECK(pkt.ip_dst == kServerIp);
    CHECK(pkt.tcp_src_port == 50000);
    CHECK(pkt.tcp_dst_port == 4840);
    CHECK(pkt.payload_length == 3);
    CHECK(BytesView(frame).subspan(pkt.payload_offset, pkt.payload_length)[0] == 'O');
}

TEST_CASE("non-ipv4 frames are pass-through, truncated frames are errors") {
    Bytes arp = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 1, 2, 3, 4, 5, 6, 0x08, 0x06, 0, 0};
    ParsedPacket pkt;
    CHECK(parse_frame(arp, pkt) == ParseStatus::NotIpv4);

    Bytes shorty = {0x00, 0x01};
    CHECK(parse_frame(shorty, pkt) == ParseStatus::TruncatedFrame);
}

TEST_CASE("syn carries no payload and no tag") {
    FlowTracker tracker;
    Bytes frame = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, 999, kTcpSyn, {});
    ParsedPacket pkt;
    REQUIRE(parse_frame(frame, pkt) == ParseStatus::Ok);
    std::vector<CompleteChunk> chunks;
    CHECK(tracker.reassemble(pkt, frame, chunks) == ReassemblyStatus::Ok);
    CHECK(chunks.empty());
    CHECK_FALSE(pkt.opcua_tag);
}

TEST_CASE("full opn chunk to the configured port is tagged") {
    FlowTracker tracker;
    Bytes wire = opn_wire(Bytes(300, 0x42));
    Bytes frame = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, 1, kTcpAck, wire);
    ParsedPacket pkt;
    REQUIRE(parse_frame(frame, pkt) == ParseStatus::Ok);
    std::vector<CompleteChunk> chunks;
    REQUIRE(tracker.reassemble(pkt, frame, chunks) == ReassemblyStatus::Ok);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].type == opcua::MessageType::Opn);
    CHECK(pkt.opcua_tag);
}

TEST_CASE("other ports are not inspected even with protocol-shaped bytes") {
    FlowTracker tracker;
    Bytes wire = opn_wire(Bytes(100, 0x01));
    Bytes frame = build_tcp_frame(kClientIp, kServerIp, 50000, 9999, 1, kTcpAck, wire);
    ParsedPacket pkt;
    REQUIRE(parse_frame(frame, pkt) == ParseStatus::Ok);
    std::vector<CompleteChunk> chunks;
    CHECK(tracker.reassemble(pkt, frame, chunks) == ReassemblyStatus::Ok);
    CHECK(chunks.empty());
    CHECK_FALSE(pkt.opcua_tag);
}

TEST_CASE("out-of-order after syn reassembles correctly") {
    FlowTracker tracker;
    Bytes wire = opn_wire(Bytes(600, 0x66));
    size_t half = wire.size() / 2;
    Bytes first(wire.begin(), wire.begin() + half);
    Bytes second(wire.begin() + half, wire.end());

    uint32_t isn = 7000;
    Bytes syn = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, isn, kTcpSyn, {});
    Bytes f1 = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, isn + 1, kTcpAck, first);
    Bytes f2 = build_tcp_frame(kClientIp, kServerIp, 50000, 4840,
                               isn + 1 + static_cast<uint32_t>(half), kTcpAck, second);

    ParsedPacket ps, p1, p2;
    REQUIRE(parse_frame(syn, ps) == ParseStatus::Ok);
    REQUIRE(parse_frame(f1, p1) == ParseStatus::Ok);
    REQUIRE(parse_frame(f2, p2) == ParseStatus::Ok);

    std::vector<CompleteChunk> chunks;
    REQUIRE(tracker.reassemble(ps, syn, chunks) == ReassemblyStatus::Ok);
    // Deliver out of order: second half stashed until the gap fills.
    REQUIRE(tracker.reassemble(p2, f2, chunks) == ReassemblyStatus::Ok);
    CHECK(chunks.empty());
    REQUIRE(tracker.reassemble(p1, f1, chunks) == ReassemblyStatus::Ok);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].bytes == wire);
    CHECK(p1.opcua_tag);
}

TEST_CASE("a persistent gap times the flow out") {
    FlowTracker tracker;
    uint32_t isn = 100;
    Bytes syn = build_tcp_frame(kClientIp, kServerIp, 50000, 4840, isn, kTcpSyn, {});
    ParsedPacket ps;
    REQUIRE(parse_frame(syn, ps) == ParseStatus::Ok);
    std::vector<CompleteChunk> chunks;
    REQUIRE(tracker.reassemble(ps, syn, chunks) == ReassemblyStatus::Ok);

    ReassemblyStatus status = ReassemblyStatus::Ok;
    for (uint32_t i = 0; i < FlowTracker::kMaxGapSegments + 2; i++) {
        Bytes seg = build_tcp_frame(kClientIp, kServerIp, 50000, 4840,
                                    isn + 1000 + i * 10, kTcpAck, Bytes(5, 0x01));
        ParsedPacket p;
        REQUIRE(parse_frame(seg, p) == ParseStatus::Ok);
        status = tracker.reassemble(p, seg, chunks);
        if (status != ReassemblyStatus::Ok) break;
    }
    CHECK(status == ReassemblyStatus::OutOfOrderGapTimeout);
}

TEST_CASE("pcap files round trip") {
    std::vector<CapturedPacket> packets;
    for (int i = 0; i < 3; i++) {
        CapturedPacket p;
        p.ts_usec = 1700000000000000ull + i * 1000;
        p.frame = build_tcp_frame(kClientIp, kServerIp, 1234, 4840, i * 10, kTcpAck,
                                  Bytes(static_cast<size_t>(i + 1), 0xEE));
        packets.push_back(p);
    }
    std::string path = "/tmp/trustgate_test_capture.pcap";
    REQUIRE(write_pcap_file(path, packets));
    std::vector<CapturedPacket> back;
    REQUIRE(read_pcap_file(path, back));
    REQUIRE(back.size() == packets.size());
    for (size_t i = 0; i < packets.size(); i++) {
        CHECK(back[i].frame == packets[i].frame);
        CHECK(back[i].ts_usec == packets[i].ts_usec);
    }
    std::remove(path.c_str());
}

TEST_CASE("capture replay emits one verdict per opn") {
    Bytes trusted_cert(400, 0x10);
    Bytes untrusted_cert(400, 0x20);
    ThumbprintTable table;
    table.install(crypto::sha1(trusted_cert));

    std::vector<CapturedPacket> packets;
    uint32_t seq_c = 1;
    auto add = [&](uint32_t src, uint32_t dst, uint16_t sp, uint16_t dp, uint32_t& seq,
                   const Bytes& payload) {
        CapturedPacket p;
        p.frame = build_tcp_frame(src, dst, sp, dp, seq, kTcpAck, payload);
        seq += static_cast<uint32_t>(payload.size());
        packets.push_back(p);
    };
    add(kClientIp, kServerIp, 40000, 4840, seq_c, opn_wire(trusted_cert));
    uint32_t seq_c2 = 1;
    add(kClientIp, kServerIp, 40001, 4840, seq_c2, opn_wire(untrusted_cert));
    uint32_t seq_other = 1;
    add(kClientIp, kServerIp, 40002, 8080, seq_other, Bytes(64, 0x77));

    PipelineConfig cfg;
    auto report = replay_capture(packets, table, cfg);
    CHECK(report.packets_total == 3);
    CHECK(report.non_opcua_packets == 1);
    REQUIRE(report.verdicts.size() == 2);
    CHECK(report.verdicts[0].decision == Decision::Allow);
    CHECK(report.verdicts[1].decision == Decision::Drop);
    CHECK(report.verdicts[1].reason == DropReason::UntrustedThumbprint);
    CHECK(report.verdicts[0].thumbprint_hex ==
          to_hex(BytesView(crypto::sha1(trusted_cert).data(), 20)));
}

TEST_CASE("empty capture replays to an empty report") {
    std::string path = "/tmp/trustgate_empty.pcap";
    REQUIRE(write_pcap_file(path, {}));
    std::vector<CapturedPacket> packets;
    REQUIRE(read_pcap_file(path, packets));
    CHECK(packets.empty());
    ThumbprintTable table;
    auto report = replay_capture(packets, table, PipelineConfig{});
    CHECK(report.packets_total == 0);
    CHECK(report.verdicts.empty());
    std::remove(path.c_str());
}
