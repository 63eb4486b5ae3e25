#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace trustgate::ledger {

/// One-way propagation presets for the simulated deployments. Delays are in
/// simulated milliseconds on the ledger's virtual clock; nothing sleeps.
struct LinkPreset {
    std::string name;
    int64_t one_way_ms;
};

inline const std::vector<LinkPreset>& link_presets() {
    static const std::vector<LinkPreset> presets = {
        {"short", 15},    // metro / same-region placement
        {"medium", 120},  // inter-continental, one hop
        {"long", 250},    // antipodal placement
    };
    return presets;
}

inline std::optional<LinkPreset> find_preset(const std::string& name) {
    for (const auto& p : link_presets()) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

/// Submission-to-delivery delay models for the two ledger layers. The base
/// ledger pays gossip plus a few confirmation rounds and occasionally a
/// reattachment; the contract layer answers from its sidechain state after
/// one half round trip plus a fixed execution cost. Both include a small
/// serialization term so payload size has a bounded, sub-10% effect.
class DelaySampler {
public:
    DelaySampler(LinkPreset preset, uint64_t seed) : preset_(preset), rng_(seed) {}

    static constexpr int64_t kBandwidthBytesPerMs = 10000;  // 10 MB/s
    static constexpr int64_t kContractExecMs = 20;
    static constexpr double kReattachProbability = 0.03;

    int64_t l1(size_t payload_bytes) {
        std::uniform_int_distribution<int64_t> rounds(1, 3);
        int64_t delay = (2 + rounds(rng_)) * preset_.one_way_ms;
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng_) < kReattachProbability) {
            std::uniform_int_distribution<int64_t> extra(5, 15);
            delay += extra(rng_) * preset_.one_way_ms;
        }
        return delay + serialization_ms(payload_bytes);
    }

    int64_t l2(size_t payload_bytes) {
        int64_t delay = preset_.one_way_ms / 2 + kContractExecMs;
        return delay + serialization_ms(payload_bytes);
    }

    const LinkPreset& preset() const { return preset_; }

private:
    static int64_t serialization_ms(size_t payload_bytes) {
        return static_cast<int64_t>(payload_bytes) / kBandwidthBytesPerMs;
    }

    LinkPreset preset_;
    std::mt19937_64 rng_;
};

/// Delay hook used by the ledger layers: maps payload size to a simulated
/// one-way delivery delay in milliseconds.
using DelayFn = std::function<int64_t(size_t payload_bytes)>;

inline DelayFn make_l1_delay(const LinkPreset& preset, uint64_t seed) {
    auto sampler = std::make_shared<DelaySampler>(preset, seed);
    return [sampler](size_t n) { return sampler->l1(n); };
}

inline DelayFn make_l2_delay(const LinkPreset& preset, uint64_t seed) {
    auto sampler = std::make_shared<DelaySampler>(preset, seed);
    return [sampler](size_t n) { return sampler->l2(n); };
}

}  // namespace trustgate::ledger
