#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/dataplane/extract.hpp"
#include "trustgate/opcua/codec.hpp"

namespace trustgate::dataplane {

struct CompleteChunk {
    opcua::MessageType type;
    opcua::ChunkType chunk_type;
    Bytes bytes;
    uint64_t stream_offset = 0;  // offset of the chunk's first byte in the stream
};

enum class ChunkerState : uint8_t {
    Framing,     // stream frames as OPC UA chunks
    NotOpcua,    // first header invalid: stream is not OPC UA traffic
    Desynced,    // framed fine, then a mid-stream header failed to parse
    Overflow,    // buffered partial data exceeded the reassembly bound
};

/// Splits an in-order byte stream into complete OPC UA chunks. Buffered
/// partial data is bounded by twice the maximum OPN wire size; exceeding the
/// bound is a reassembly overflow. Also tracks which stream byte ranges
/// belong to OPN chunks so packet-level tagging can query them.
class StreamChunker {
public:
    explicit StreamChunker(size_t max_chunks = CertChunks::kDefaultMaxChunks)
        : buffer_limit_(2 * (CertChunks::kBlockSize * max_chunks + opcua::kOpnFixedOverhead)) {}

    /// Appends data and returns every chunk completed by it. Once the state
    /// leaves Framing no further chunks are produced.
    std::vector<CompleteChunk> feed(BytesView data);

    ChunkerState state() const { return state_; }
    size_t buffered() const { return buffer_.size(); }
    size_t buffer_limit() const { return buffer_limit_; }
    uint64_t stream_position() const { return stream_pos_; }

    /// Drains whatever is buffered (used when a stream turns out not to be
    /// OPC UA and must be forwarded raw).
    Bytes take_buffered();

    /// True if any byte of stream range [begin, end) lies inside an OPN
    /// chunk, including one whose body has not fully arrived yet.
    bool intersects_opn(uint64_t begin, uint64_t end) const;

private:
    void note_opn_interval(uint64_t begin, uint64_t end);

    Bytes buffer_;
    uint64_t buffer_start_ = 0;  // stream offset of buffer_[0]
    uint64_t stream_pos_ = 0;
    ChunkerState state_ = ChunkerState::Framing;
    size_t buffer_limit_;
    std::deque<std::pair<uint64_t, uint64_t>> opn_intervals_;
};

}  // namespace trustgate::dataplane
