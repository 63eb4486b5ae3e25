#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trustgate {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

/// Bounds-checked forward cursor over a byte buffer. All multi-byte reads
/// are little-endian unless the method name says otherwise. Reads never go
/// out of bounds; a failed read returns false/nullopt and leaves the cursor
/// untouched.
class ByteReader {
public:
    explicit ByteReader(BytesView data) : data_(data) {}

    size_t remaining() const { return data_.size() - pos_; }
    size_t position() const { return pos_; }

    bool read_u8(uint8_t& out) {
        if (remaining() < 1) return false;
        out = data_[pos_++];
        return true;
    }

    bool read_u32_le(uint32_t& out) {
        if (remaining() < 4) return false;
        out = static_cast<uint32_t>(data_[pos_]) |
              (static_cast<uint32_t>(data_[pos_ + 1]) << 8) |
              (static_cast<uint32_t>(data_[pos_ + 2]) << 16) |
              (static_cast<uint32_t>(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return true;
    }

    bool read_i32_le(int32_t& out) {
        uint32_t raw = 0;
        if (!read_u32_le(raw)) return false;
        out = static_cast<int32_t>(raw);
        return true;
    }

    // Big-endian view of the same four wire bytes. Models how a network
    // parser's extract() presents a 32-bit field before byte reordering.
    bool read_u32_be(uint32_t& out) {
        if (remaining() < 4) return false;
        out = (static_cast<uint32_t>(data_[pos_]) << 24) |
              (static_cast<uint32_t>(data_[pos_ + 1]) << 16) |
              (static_cast<uint32_t>(data_[pos_ + 2]) << 8) |
              static_cast<uint32_t>(data_[pos_ + 3]);
        pos_ += 4;
        return true;
    }

    bool read_u16_be(uint16_t& out) {
        if (remaining() < 2) return false;
        out = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return true;
    }

    bool read_bytes(size_t n, Bytes& out) {
        if (remaining() < n) return false;
        out.assign(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return true;
    }

    bool view_bytes(size_t n, BytesView& out) {
        if (remaining() < n) return false;
        out = data_.subspan(pos_, n);
        pos_ += n;
        return true;
    }

    bool skip(size_t n) {
        if (remaining() < n) return false;
        pos_ += n;
        return true;
    }

private:
    BytesView data_;
    size_t pos_ = 0;
};

/// Append-only builder for wire buffers, little-endian.
class ByteWriter {
public:
    void write_u8(uint8_t v) { buf_.push_back(v); }

    void write_u32_le(uint32_t v) {
        buf_.push_back(static_cast<uint8_t>(v & 0xFF));
        buf_.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
        buf_.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
        buf_.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
    }

    void write_i32_le(int32_t v) { write_u32_le(static_cast<uint32_t>(v)); }

    void write_bytes(BytesView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

    void write_str(const std::string& s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    // Patch a previously written u32 in place.
    void patch_u32_le(size_t offset, uint32_t v) {
        buf_[offset] = static_cast<uint8_t>(v & 0xFF);
        buf_[offset + 1] = static_cast<uint8_t>((v >> 8) & 0xFF);
        buf_[offset + 2] = static_cast<uint8_t>((v >> 16) & 0xFF);
        buf_[offset + 3] = static_cast<uint8_t>((v >> 24) & 0xFF);
    }

    size_t size() const { return buf_.size(); }
    Bytes take() { return std::move(buf_); }
    const Bytes& data() const { return buf_; }

private:
    Bytes buf_;
};

std::string to_hex(BytesView data);
std::optional<Bytes> from_hex(const std::string& hex);

std::string to_base64(BytesView data);
std::optional<Bytes> from_base64(const std::string& b64);

}  // namespace trustgate
