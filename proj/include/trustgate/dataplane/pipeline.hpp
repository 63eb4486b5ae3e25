#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trustgate/bytes.hpp"
#include "trustgate/dataplane/extract.hpp"
#include "trustgate/dataplane/table.hpp"
#include "trustgate/opcua/codec.hpp"

namespace trustgate::dataplane {

enum class Decision : uint8_t { Allow, Drop };

enum class DropReason : uint8_t {
    None = 0,
    ZeroLengthCertificate,
    CertificateTooLong,
    UntrustedThumbprint,
    MalformedOpn,
};

const char* drop_reason_name(DropReason r);

enum class DropMode : uint8_t { Silent, Rst };

struct Verdict {
    Decision decision = Decision::Allow;
    DropReason reason = DropReason::None;
    bool was_opn = false;
    std::optional<Thumbprint> sender_thumbprint;
    std::optional<Thumbprint> receiver_thumbprint;
};

struct PipelineConfig {
    uint16_t opcua_port = 4840;
    bool validation_enabled = true;
    size_t max_chunks = CertChunks::kDefaultMaxChunks;
    DropMode drop_mode = DropMode::Silent;
};

/// One timing record per processed unit: an OPC UA chunk for framed traffic,
/// a read burst for raw traffic. Tagged records mark OPN chunks, mirroring
/// the tag-and-measure method used on the switch.
struct MetricsRecord {
    uint64_t processing_ns = 0;
    uint64_t dequeue_ns = 0;
    bool tagged = false;
};

struct MetricsSummary {
    size_t count = 0;
    double mean = 0.0;
    uint64_t max = 0;
    uint64_t p50 = 0;
    uint64_t p95 = 0;
};

MetricsSummary summarize(std::vector<uint64_t> values);

/// Collects per-connection record buffers. Forwarding contexts accumulate
/// records locally and merge once on close, so recording never blocks the
/// data path.
class MetricsCollector {
public:
    void merge(std::vector<MetricsRecord>&& records) {
        std::lock_guard lock(mu_);
        records_.insert(records_.end(), records.begin(), records.end());
    }

    std::vector<MetricsRecord> records() const {
        std::lock_guard lock(mu_);
        return records_;
    }

    size_t tagged_count() const {
        std::lock_guard lock(mu_);
        size_t n = 0;
        for (const auto& r : records_) n += r.tagged ? 1 : 0;
        return n;
    }

    void clear() {
        std::lock_guard lock(mu_);
        records_.clear();
    }

    MetricsSummary processing_summary(bool tagged) const;
    MetricsSummary dequeue_summary(bool tagged) const;

private:
    mutable std::mutex mu_;
    std::vector<MetricsRecord> records_;
};

struct VerdictRecord {
    std::string flow;
    std::string thumbprint_hex;
    Decision decision = Decision::Allow;
    DropReason reason = DropReason::None;
};

class VerdictLog {
public:
    void append(VerdictRecord rec) {
        std::lock_guard lock(mu_);
        records_.push_back(std::move(rec));
    }

    std::vector<VerdictRecord> records() const {
        std::lock_guard lock(mu_);
        return records_;
    }

private:
    mutable std::mutex mu_;
    std::vector<VerdictRecord> records_;
};

/// Trust decision for one complete chunk. Non-OPN chunks pass without
/// certificate work; OPN chunks go through the extraction pipeline and the
/// thumbprint table. With validation disabled every chunk is allowed and
/// OPN chunks are still tagged for metrics.
Verdict process_chunk(BytesView chunk, opcua::MessageType type, const ThumbprintTable& table,
                      const PipelineConfig& cfg);

}  // namespace trustgate::dataplane
