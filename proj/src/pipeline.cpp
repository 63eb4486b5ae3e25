#include "trustgate/dataplane/pipeline.hpp"

#include <algorithm>

#include "trustgate/crypto.hpp"

namespace trustgate::dataplane {

const char* drop_reason_name(DropReason r) {
    switch (r) {
        case DropReason::None: return "None";
        case DropReason::ZeroLengthCertificate: return "ZeroLengthCertificate";
        case DropReason::CertificateTooLong: return "CertificateTooLong";
        case DropReason::UntrustedThumbprint: return "UntrustedThumbprint";
        case DropReason::MalformedOpn: return "MalformedOpn";
    }
    return "?";
}

MetricsSummary summarize(std::vector<uint64_t> values) {
    MetricsSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    uint64_t total = 0;
    for (uint64_t v : values) total += v;
    s.mean = static_cast<double>(total) / static_cast<double>(values.size());
    s.max = values.back();
    s.p50 = values[values.size() / 2];
    s.p95 = values[std::min(values.size() - 1, (values.size() * 95) / 100)];
    return s;
}

MetricsSummary MetricsCollector::processing_summary(bool tagged) const {
    std::vector<uint64_t> vals;
    {
        std::lock_guard lock(mu_);
        for (const auto& r : records_) {
            if (r.tagged == tagged) vals.push_back(r.processing_ns);
        }
    }
    return summarize(std::move(vals));
}

MetricsSummary MetricsCollector::dequeue_summary(bool tagged) const {
    std::vector<uint64_t> vals;
    {
        std::lock_guard lock(mu_);
        for (const auto& r : records_) {
            if (r.tagged == tagged) vals.push_back(r.dequeue_ns);
        }
    }
    return summarize(std::move(vals));
}

namespace {

// Policy URI read straight from the OPN layout; used only when the
// certificate field is null and the discovery-channel rule applies.
std::string read_policy_uri(BytesView opn_chunk) {
    ByteReader r(opn_chunk);
    if (!r.skip(opcua::kHeaderSize + 4)) return {};
    int32_t len = 0;
    if (!r.read_i32_le(len) || len <= 0) return {};
    Bytes uri;
    if (!r.read_bytes(static_cast<size_t>(len), uri)) return {};
    return std::string(uri.begin(), uri.end());
}

}  // namespace

Verdict process_chunk(BytesView chunk, opcua::MessageType type, const ThumbprintTable& table,
                      const PipelineConfig& cfg) {
    Verdict v;
    v.was_opn = (type == opcua::MessageType::Opn);
    if (!v.was_opn || !cfg.validation_enabled) {
        return v;  // Allow; no certificate work outside the OPN path
    }

    ExtractResult ex = extract_certificate(chunk, cfg.max_chunks);
    v.receiver_thumbprint = ex.receiver_thumbprint;
    switch (ex.status) {
        case ExtractStatus::Ok: {
            Bytes der = ex.cert.concatenated();
            Thumbprint tp = crypto::sha1(der);
            v.sender_thumbprint = tp;
            if (table.lookup(tp)) {
                v.decision = Decision::Allow;
            } else {
                v.decision = Decision::Drop;
                v.reason = DropReason::UntrustedThumbprint;
            }
            return v;
        }
        case ExtractStatus::NullCertificate: {
            // A channel claiming no security carries no certificate; it can
            // only ever reach discovery services. Any other policy with a
            // missing certificate is dropped.
            if (read_policy_uri(chunk) == opcua::kPolicyNone) {
                v.decision = Decision::Allow;
            } else {
                v.decision = Decision::Drop;
                v.reason = DropReason::ZeroLengthCertificate;
            }
            return v;
        }
        case ExtractStatus::ZeroLengthCertificate:
            v.decision = Decision::Drop;
            v.reason = DropReason::ZeroLengthCertificate;
            return v;
        case ExtractStatus::CertificateTooLong:
            v.decision = Decision::Drop;
            v.reason = DropReason::CertificateTooLong;
            return v;
        case ExtractStatus::MalformedOpn:
        default:
            v.decision = Decision::Drop;
            v.reason = DropReason::MalformedOpn;
            return v;
    }
}

}  // namespace trustgate::dataplane
