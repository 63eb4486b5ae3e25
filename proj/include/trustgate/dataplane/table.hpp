#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <vector>

#include "trustgate/bytes.hpp"

namespace trustgate::dataplane {

using Thumbprint = std::array<uint8_t, 20>;

enum class TableStatus : uint8_t { Ok, Full };

/// Exact-match allow-list keyed by 20-byte certificate thumbprints, the
/// software stand-in for the switch's match-action table. Concurrent readers,
/// serialized writers; every lookup observes a single generation.
class ThumbprintTable {
public:
    static constexpr size_t kDefaultCapacity = 1024;

    explicit ThumbprintTable(size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

    bool lookup(const Thumbprint& key) const {
        std::shared_lock lock(mu_);
        return entries_.count(key) > 0;
    }

    // Installing a present key succeeds without change but still bumps the
    // generation. A new key at capacity reports Full and installs nothing.
    TableStatus install(const Thumbprint& key) {
        std::unique_lock lock(mu_);
        if (entries_.count(key) == 0 && entries_.size() >= capacity_) {
            return TableStatus::Full;
        }
        entries_.insert(key);
        ++generation_;
        return TableStatus::Ok;
    }

    TableStatus remove(const Thumbprint& key) {
        std::unique_lock lock(mu_);
        entries_.erase(key);
        ++generation_;
        return TableStatus::Ok;
    }

    void clear() {
        std::unique_lock lock(mu_);
        entries_.clear();
        ++generation_;
    }

    size_t size() const {
        std::shared_lock lock(mu_);
        return entries_.size();
    }

    size_t capacity() const { return capacity_; }

    uint64_t generation() const {
        std::shared_lock lock(mu_);
        return generation_;
    }

    std::vector<Thumbprint> snapshot() const {
        std::shared_lock lock(mu_);
        return {entries_.begin(), entries_.end()};
    }

private:
    mutable std::shared_mutex mu_;
    std::set<Thumbprint> entries_;
    size_t capacity_;
    uint64_t generation_ = 0;
};

}  // namespace trustgate::dataplane
