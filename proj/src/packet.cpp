#include "trustgate/dataplane/packet.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>

namespace trustgate::dataplane {

namespace {
constexpr size_t kEthHeaderLen = 14;
constexpr uint16_t kEthertypeIpv4 = 0x0800;
constexpr uint8_t kIpProtoTcp = 6;
}  // namespace

std::string FlowKey::to_string() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u:%u->%u.%u.%u.%u:%u", (src >> 24) & 0xFF,
                  (src >> 16) & 0xFF, (src >> 8) & 0xFF, src & 0xFF, sport, (dst >> 24) & 0xFF,
                  (dst >> 16) & 0xFF, (dst >> 8) & 0xFF, dst & 0xFF, dport);
    return buf;
}

ParseStatus parse_frame(BytesView frame, ParsedPacket& out) {
    out = ParsedPacket{};
    if (frame.size() < kEthHeaderLen) return ParseStatus::TruncatedFrame;
    std::copy(frame.begin(), frame.begin() + 6, out.eth_dst.begin());
    std::copy(frame.begin() + 6, frame.begin() + 12, out.eth_src.begin());
    out.ethertype = static_cast<uint16_t>((frame[12] << 8) | frame[13]);
    if (out.ethertype != kEthertypeIpv4) return ParseStatus::NotIpv4;

    BytesView ip = frame.subspan(kEthHeaderLen);
    if (ip.size() < 20) return ParseStatus::TruncatedFrame;
    uint8_t version = ip[0] >> 4;
    size_t ihl = static_cast<size_t>(ip[0] & 0x0F) * 4;
    if (version != 4 || ihl < 20 || ip.size() < ihl) return ParseStatus::TruncatedFrame;
    out.has_ipv4 = true;
    out.ip_total_length = static_cast<uint16_t>((ip[2] << 8) | ip[3]);
    out.ip_protocol = ip[9];
    out.ip_src = (static_cast<uint32_t>(ip[12]) << 24) | (static_cast<uint32_t>(ip[13]) << 16) |
                 (static_cast<uint32_t>(ip[14]) << 8) | static_cast<uint32_t>(ip[15]);
    out.ip_dst = (static_cast<uint32_t>(ip[16]) << 24) | (static_cast<uint32_t>(ip[17]) << 16) |
                 (static_cast<uint32_t>(ip[18]) << 8) | static_cast<uint32_t>(ip[19]);
    if (out.ip_total_length < ihl || out.ip_total_length > ip.size()) {
        return ParseStatus::TruncatedFrame;
    }
    if (out.ip_protocol != kIpProtoTcp) return ParseStatus::Ok;

    BytesView tcp = ip.subspan(ihl, out.ip_total_length - ihl);
    if (tcp.size() < 20) return ParseStatus::TruncatedFrame;
    size_t data_offset = static_cast<size_t>(tcp[12] >> 4) * 4;
    if (data_offset < 20 || tcp.size() < data_offset) return ParseStatus::TruncatedFrame;
    out.has_tcp = true;
    out.tcp_src_port = static_cast<uint16_t>((tcp[0] << 8) | tcp[1]);
    out.tcp_dst_port = static_cast<uint16_t>((tcp[2] << 8) | tcp[3]);
    out.tcp_seq = (static_cast<uint32_t>(tcp[4]) << 24) | (static_cast<uint32_t>(tcp[5]) << 16) |
                  (static_cast<uint32_t>(tcp[6]) << 8) | static_cast<uint32_t>(tcp[7]);
    out.tcp_flags = tcp[13];
    out.payload_offset = kEthHeaderLen + ihl + data_offset;
    out.payload_length = tcp.size() - data_offset;
    return ParseStatus::Ok;
}

ReassemblyStatus FlowTracker::reassemble(ParsedPacket& pkt, BytesView frame,
                                         std::vector<CompleteChunk>& out_chunks) {
    out_chunks.clear();
    if (!pkt.has_tcp) return ReassemblyStatus::Ok;
    if (pkt.tcp_src_port != opcua_port_ && pkt.tcp_dst_port != opcua_port_) {
        return ReassemblyStatus::Ok;  // port gate: not OPC UA traffic
    }

    FlowKey key{pkt.ip_src, pkt.ip_dst, pkt.tcp_src_port, pkt.tcp_dst_port};
    auto it = flows_.find(key);
    if (it == flows_.end()) {
        it = flows_.emplace(key, StreamState(max_chunks_)).first;
    }
    StreamState& st = it->second;
    if (st.dropped) return ReassemblyStatus::Ok;

    if (pkt.tcp_flags & kTcpSyn) {
        st.have_seq = true;
        st.expected_seq = pkt.tcp_seq + 1;
        return ReassemblyStatus::Ok;
    }
    if (pkt.payload_length == 0) return ReassemblyStatus::Ok;
    if (!st.have_seq) {
        st.have_seq = true;
        st.expected_seq = pkt.tcp_seq;
    }

    BytesView payload = frame.subspan(pkt.payload_offset, pkt.payload_length);
    uint64_t tag_begin = 0, tag_end = 0;
    bool fed = false;

    auto feed_segment = [&](BytesView data) {
        uint64_t begin = st.chunker.stream_position();
        auto chunks = st.chunker.feed(data);
        for (auto& c : chunks) out_chunks.push_back(std::move(c));
        if (!fed) {
            tag_begin = begin;
            tag_end = st.chunker.stream_position();
            fed = true;
        }
        st.expected_seq += static_cast<uint32_t>(data.size());
    };

    int32_t delta = static_cast<int32_t>(pkt.tcp_seq - st.expected_seq);
    if (delta == 0) {
        feed_segment(payload);
    } else if (delta < 0) {
        // Retransmission overlap: trim the already-delivered prefix.
        size_t skip = static_cast<size_t>(-delta);
        if (skip < payload.size()) feed_segment(payload.subspan(skip));
    } else {
        st.pending.emplace(pkt.tcp_seq, Bytes(payload.begin(), payload.end()));
        st.pending_bytes += payload.size();
        if (st.pending.size() > kMaxGapSegments ||
            st.pending_bytes > st.chunker.buffer_limit()) {
            st.dropped = true;
            return ReassemblyStatus::OutOfOrderGapTimeout;
        }
    }

    // Drain any stashed segments the gap fill made contiguous.
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (auto pit = st.pending.begin(); pit != st.pending.end();) {
            int32_t d = static_cast<int32_t>(pit->first - st.expected_seq);
            if (d < 0) {
                size_t skip = static_cast<size_t>(-d);
                if (skip < pit->second.size()) {
                    feed_segment(BytesView(pit->second).subspan(skip));
                    progressed = true;
                }
                st.pending_bytes -= pit->second.size();
                pit = st.pending.erase(pit);
            } else if (d == 0) {
                feed_segment(pit->second);
                st.pending_bytes -= pit->second.size();
                pit = st.pending.erase(pit);
                progressed = true;
            } else {
                ++pit;
            }
        }
    }

    if (st.chunker.state() == ChunkerState::Overflow) {
        st.dropped = true;
        return ReassemblyStatus::ReassemblyOverflow;
    }
    if (fed) {
        pkt.opcua_tag = st.chunker.intersects_opn(tag_begin, tag_end);
    }
    return ReassemblyStatus::Ok;
}

bool FlowTracker::flow_dropped(const FlowKey& key) const {
    auto it = flows_.find(key);
    return it != flows_.end() && it->second.dropped;
}

// ---- pcap ----

namespace {
constexpr uint32_t kPcapMagicUsec = 0xA1B2C3D4;
constexpr uint32_t kPcapMagicNsec = 0xA1B23C4D;

uint32_t flip32(uint32_t v) {
    return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

void put_u32le(Bytes& b, uint32_t v) {
    b.push_back(v & 0xFF);
    b.push_back((v >> 8) & 0xFF);
    b.push_back((v >> 16) & 0xFF);
    b.push_back((v >> 24) & 0xFF);
}

void put_u16le(Bytes& b, uint16_t v) {
    b.push_back(v & 0xFF);
    b.push_back((v >> 8) & 0xFF);
}
}  // namespace

bool read_pcap_file(const std::string& path, std::vector<CapturedPacket>& out) {
    out.clear();
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return false;
    Bytes data;
    uint8_t buf[65536];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.insert(data.end(), buf, buf + n);
    std::fclose(f);

    if (data.size() < 24) return false;
    auto rd32 = [](const uint8_t* p) {
        uint32_t v;
        std::memcpy(&v, p, 4);
        return v;
    };
    uint32_t magic = rd32(data.data());
    bool swapped;
    bool nsec;
    if (magic == kPcapMagicUsec) { swapped = false; nsec = false; }
    else if (magic == kPcapMagicNsec) { swapped = false; nsec = true; }
    else if (flip32(magic) == kPcapMagicUsec) { swapped = true; nsec = false; }
    else if (flip32(magic) == kPcapMagicNsec) { swapped = true; nsec = true; }
    else return false;

    auto fix = [swapped](uint32_t v) { return swapped ? flip32(v) : v; };
    size_t pos = 24;
    while (pos + 16 <= data.size()) {
        uint32_t ts_sec = fix(rd32(data.data() + pos));
        uint32_t ts_frac = fix(rd32(data.data() + pos + 4));
        uint32_t incl = fix(rd32(data.data() + pos + 8));
        pos += 16;
        if (incl > data.size() - pos) return false;
        CapturedPacket pkt;
        uint64_t usec = nsec ? ts_frac / 1000 : ts_frac;
        pkt.ts_usec = static_cast<uint64_t>(ts_sec) * 1000000ull + usec;
        pkt.frame.assign(data.begin() + pos, data.begin() + pos + incl);
        out.push_back(std::move(pkt));
        pos += incl;
    }
    return pos == data.size();
}

bool write_pcap_file(const std::string& path, const std::vector<CapturedPacket>& packets) {
    Bytes out;
    put_u32le(out, kPcapMagicUsec);
    put_u16le(out, 2);
    put_u16le(out, 4);
    put_u32le(out, 0);
    put_u32le(out, 0);
    put_u32le(out, 65535);
    put_u32le(out, 1);  // LINKTYPE_ETHERNET
    for (const auto& p : packets) {
        put_u32le(out, static_cast<uint32_t>(p.ts_usec / 1000000ull));
        put_u32le(out, static_cast<uint32_t>(p.ts_usec % 1000000ull));
        put_u32le(out, static_cast<uint32_t>(p.frame.size()));
        put_u32le(out, static_cast<uint32_t>(p.frame.size()));
        out.insert(out.end(), p.frame.begin(), p.frame.end());
    }
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return false;
    size_t written = std::fwrite(out.data(), 1, out.size(), f);
    std::fclose(f);
    return written == out.size();
}

Bytes build_tcp_frame(uint32_t ip_src, uint32_t ip_dst, uint16_t sport, uint16_t dport,
                      uint32_t seq, uint8_t flags, BytesView payload) {
    Bytes f;
    // Ethernet
    for (int i = 0; i < 6; i++) f.push_back(0x02);
    for (int i = 0; i < 6; i++) f.push_back(0x04);
    f.push_back(0x08);
    f.push_back(0x00);
    // IPv4, 20-byte header
    uint16_t total = static_cast<uint16_t>(20 + 20 + payload.size());
    f.push_back(0x45);
    f.push_back(0);
    f.push_back(total >> 8);
    f.push_back(total & 0xFF);
    f.push_back(0); f.push_back(0); f.push_back(0x40); f.push_back(0);  // id, DF
    f.push_back(64);  // ttl
    f.push_back(6);   // tcp
    f.push_back(0); f.push_back(0);  // checksum unused
    for (int s = 24; s >= 0; s -= 8) f.push_back((ip_src >> s) & 0xFF);
    for (int s = 24; s >= 0; s -= 8) f.push_back((ip_dst >> s) & 0xFF);
    // TCP, 20-byte header
    f.push_back(sport >> 8); f.push_back(sport & 0xFF);
    f.push_back(dport >> 8); f.push_back(dport & 0xFF);
    for (int s = 24; s >= 0; s -= 8) f.push_back((seq >> s) & 0xFF);
    for (int i = 0; i < 4; i++) f.push_back(0);  // ack
    f.push_back(0x50);  // data offset 5
    f.push_back(flags);
    f.push_back(0xFF); f.push_back(0xFF);  // window
    f.push_back(0); f.push_back(0); f.push_back(0); f.push_back(0);  // checksum, urg
    f.insert(f.end(), payload.begin(), payload.end());
    return f;
}

ReplayReport replay_capture(const std::vector<CapturedPacket>& packets,
                            const ThumbprintTable& table, const PipelineConfig& cfg) {
    ReplayReport report;
    FlowTracker tracker(cfg.opcua_port, cfg.max_chunks);
    for (const auto& cap : packets) {
        report.packets_total++;
        ParsedPacket pkt;
        ParseStatus ps = parse_frame(cap.frame, pkt);
        if (ps != ParseStatus::Ok || !pkt.has_tcp ||
            (pkt.tcp_src_port != cfg.opcua_port && pkt.tcp_dst_port != cfg.opcua_port)) {
            report.non_opcua_packets++;
            continue;
        }
        std::vector<CompleteChunk> chunks;
        ReassemblyStatus rs = tracker.reassemble(pkt, cap.frame, chunks);
        FlowKey key{pkt.ip_src, pkt.ip_dst, pkt.tcp_src_port, pkt.tcp_dst_port};
        if (rs != ReassemblyStatus::Ok) {
            report.verdicts.push_back({key.to_string(), "", Decision::Drop,
                                       DropReason::MalformedOpn});
            continue;
        }
        if (pkt.opcua_tag) report.packets_opcua++;
        for (const auto& chunk : chunks) {
            auto t0 = std::chrono::steady_clock::now();
            Verdict v = process_chunk(chunk.bytes, chunk.type, table, cfg);
            auto t1 = std::chrono::steady_clock::now();
            MetricsRecord rec;
            rec.processing_ns = static_cast<uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
            rec.tagged = v.was_opn;
            report.metrics.push_back(rec);
            if (v.was_opn) {
                VerdictRecord vr;
                vr.flow = key.to_string();
                vr.thumbprint_hex =
                    v.sender_thumbprint ? to_hex(*v.sender_thumbprint) : std::string();
                vr.decision = v.decision;
                vr.reason = v.reason;
                report.verdicts.push_back(std::move(vr));
            }
        }
    }
    return report;
}

}  // namespace trustgate::dataplane
