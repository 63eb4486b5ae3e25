#include "trustgate/dataplane/chunker.hpp"

namespace trustgate::dataplane {

std::vector<CompleteChunk> StreamChunker::feed(BytesView data) {
    std::vector<CompleteChunk> out;
    stream_pos_ += data.size();
    if (state_ != ChunkerState::Framing) return out;

    buffer_.insert(buffer_.end(), data.begin(), data.end());

    while (buffer_.size() >= opcua::kHeaderSize) {
        opcua::MessageHeader hdr;
        auto err = opcua::decode_message_header(buffer_, hdr);
        if (err != opcua::DecodeError::Ok || hdr.message_size < opcua::kHeaderSize) {
            state_ = (buffer_start_ == 0) ? ChunkerState::NotOpcua : ChunkerState::Desynced;
            return out;
        }
        if (hdr.msg_type == opcua::MessageType::Opn) {
            note_opn_interval(buffer_start_, buffer_start_ + hdr.message_size);
        }
        if (hdr.message_size > buffer_limit_) {
            state_ = ChunkerState::Overflow;
            buffer_start_ += buffer_.size();
            buffer_.clear();
            return out;
        }
        if (buffer_.size() < hdr.message_size) break;  // partial chunk, wait

        CompleteChunk chunk;
        chunk.type = hdr.msg_type;
        chunk.chunk_type = hdr.chunk_type;
        chunk.stream_offset = buffer_start_;
        chunk.bytes.assign(buffer_.begin(), buffer_.begin() + hdr.message_size);
        buffer_.erase(buffer_.begin(), buffer_.begin() + hdr.message_size);
        buffer_start_ += hdr.message_size;
        out.push_back(std::move(chunk));
    }

    if (buffer_.size() > buffer_limit_) {
        state_ = ChunkerState::Overflow;
        buffer_start_ += buffer_.size();
        buffer_.clear();
    }
    return out;
}

Bytes StreamChunker::take_buffered() {
    buffer_start_ += buffer_.size();
    return std::exchange(buffer_, {});
}

void StreamChunker::note_opn_interval(uint64_t begin, uint64_t end) {
    if (!opn_intervals_.empty() && opn_intervals_.back().first == begin) return;
    opn_intervals_.emplace_back(begin, end);
    while (opn_intervals_.size() > 64) opn_intervals_.pop_front();
}

bool StreamChunker::intersects_opn(uint64_t begin, uint64_t end) const {
    for (const auto& [s, e] : opn_intervals_) {
        if (begin < e && s < end) return true;
    }
    return false;
}

}  // namespace trustgate::dataplane
