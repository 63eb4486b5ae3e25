#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace trustgate::bench {

/// Measurement campaign output: a JSON document plus a CSV view of the same
/// per-trial records.
struct BenchReport {
    nlohmann::json doc;

    bool write_json(const std::string& path) const;
    bool write_csv(const std::string& path) const;
    std::vector<std::string> csv_lines() const;
};

/// In-path overhead campaign: runs n establishment handshakes through the
/// gateway twice, once with validation disabled (baseline) and once enabled,
/// and reports per-chunk processing, queueing and end-to-end times.
BenchReport run_q1(size_t n, uint64_t seed);

/// Propagation campaign: measures submission-to-delivery delay of
/// certificate actions across simulated link presets and payload sizes, on
/// the chosen ledger layer. Delays are in simulated milliseconds.
BenchReport run_q2(size_t trials_per_cell, const std::vector<std::string>& presets,
                   const std::vector<size_t>& payload_sizes, const std::string& layer,
                   uint64_t seed);

}  // namespace trustgate::bench
