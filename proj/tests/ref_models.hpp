#pragma once

// Brute-force reference implementations of the direct-mapped cache and TLB,
// written with plain division/modulo arithmetic instead of the production
// mask-and-shift form, for randomized cross-checking.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace ref {

class RefCache {
public:
    explicit RefCache(size_t blocks) : blocks_(blocks), tags_(blocks, -1) {}

    // True on hit. A read miss installs the block, a write miss does not.
    bool read(uint32_t pa) {
        size_t idx = index(pa);
        long long t = tag(pa);
        if (tags_[idx] == t) return true;
        tags_[idx] = t;
        return false;
    }
    bool write(uint32_t pa) { return tags_[index(pa)] == tag(pa); }
    bool probe(uint32_t pa) const { return tags_[index(pa)] == tag(pa); }

private:
    size_t index(uint32_t pa) const { return size_t(pa / 4) % blocks_; }
    long long tag(uint32_t pa) const { return (long long)(pa / 4 / blocks_); }

    size_t blocks_;
    std::vector<long long> tags_;
};

class RefTlb {
public:
    explicit RefTlb(size_t entries) : entries_(entries), slots_(entries) {}

    std::optional<uint32_t> lookup(uint32_t vpn) const {
        const auto& s = slots_[size_t(vpn) % entries_];
        if (s && s->first == vpn) return s->second;
        return std::nullopt;
    }
    void refill(uint32_t vpn, uint32_t ppn) {
        slots_[size_t(vpn) % entries_] = std::make_pair(vpn, ppn);
    }

private:
    size_t entries_;
    std::vector<std::optional<std::pair<uint32_t, uint32_t>>> slots_;
};

} // namespace ref
