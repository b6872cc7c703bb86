#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hvsim/config.hpp"
#include "hvsim/image.hpp"
#include "hvsim/trace.hpp"

namespace hvsim::timing {

// Direct-mapped cache of single-word blocks, physically indexed and tagged.
// Only tags are modeled; the simulator never needs cached payloads. Writes
// are write-through: a write hit refreshes the block, a write miss does not
// allocate.
class CacheModel {
public:
    explicit CacheModel(uint32_t blocks);

    bool read(uint32_t pa);  // true on hit; a miss fills the block
    bool write(uint32_t pa); // true on hit; never fills

    bool probe(uint32_t pa) const; // hit test without side effects
    void fill(uint32_t pa);        // warm one block directly
    uint32_t blocks() const { return uint32_t(tags_.size()); }

private:
    struct Block {
        bool valid = false;
        uint32_t tag = 0;
    };
    uint32_t index_of(uint32_t pa) const;
    uint32_t tag_of(uint32_t pa) const;

    std::vector<Block> tags_;
    uint32_t index_mask_;
    uint32_t tag_shift_;
};

// Direct-mapped TLB indexed by the low VPN bits, tagged with the full VPN.
class TlbModel {
public:
    explicit TlbModel(uint32_t entries);

    std::optional<uint32_t> lookup(uint32_t vpn) const; // ppn on hit
    void refill(uint32_t vpn, uint32_t ppn);
    uint32_t entries() const { return uint32_t(slots_.size()); }

private:
    struct Entry {
        bool valid = false;
        uint32_t vpn = 0;
        uint32_t ppn = 0;
    };
    std::vector<Entry> slots_;
    uint32_t index_mask_;
};

// The timing core's private copy of the page tables, snapshotted at
// construction so the walker never races the executing hart. A walk yields
// the host-physical PTE address (for the D-cache access that models the
// table read) and the mapped PPN.
class ShadowTranslator {
public:
    ShadowTranslator(const image::PageTableSet& tables,
                     const image::RegionMap& rmap);

    struct Walk {
        uint32_t pte_hpa = 0;
        std::optional<uint32_t> ppn; // nullopt: page not mapped
    };
    // Raises Error{UnmappedPage} when the VPN is outside the table window.
    Walk walk(uint32_t va) const;

    uint32_t page_offset_bits() const { return page_offset_bits_; }

private:
    image::PageTableSet tables_;
    image::RegionMap rmap_;
    uint32_t page_offset_bits_;
};

// The nine event counters, grouped by pipeline stage.
struct CounterSet {
    uint64_t itlb_miss_if = 0;
    uint64_t icache_miss_if = 0;
    uint64_t dcache_pte_miss_if = 0;
    uint64_t dtlb_miss_load = 0;
    uint64_t dcache_data_miss_load = 0;
    uint64_t dcache_pte_miss_load = 0;
    uint64_t dtlb_miss_store = 0;
    uint64_t dcache_data_miss_store = 0;
    uint64_t dcache_pte_miss_store = 0;

    uint64_t itlb_total() const { return itlb_miss_if; }
    uint64_t dtlb_total() const { return dtlb_miss_load + dtlb_miss_store; }
    uint64_t icache_total() const { return icache_miss_if; }
    // Every D-cache access class: data loads/stores plus PTE reads from all
    // three stages.
    uint64_t dcache_total() const {
        return dcache_data_miss_load + dcache_data_miss_store +
               dcache_pte_miss_load + dcache_pte_miss_store +
               dcache_pte_miss_if;
    }

    bool operator==(const CounterSet&) const = default;
};

// Caches, TLBs, shadow tables and counters bundled for one run.
struct TimingState {
    CacheModel icache;
    CacheModel dcache;
    TlbModel itlb;
    TlbModel dtlb;
    ShadowTranslator shadow;
    CounterSet counters;
    SimConfig cfg;

    TimingState(const SimConfig& cfg, const image::PageTableSet& tables,
                const image::RegionMap& rmap);
};

// Which access is asking for a translation; selects the TLB and the counter
// group.
enum class AccessStage { Fetch, Load, Store };

struct TranslateResult {
    uint32_t hpa = 0;
    uint32_t extra_cycles = 0; // 0 TLB hit, else the PTE read through the
                               // D-cache: 1 on hit, miss penalty on miss
};

TranslateResult translate_timed(TimingState& ts, uint32_t va,
                                AccessStage stage);

// Stage cost composition, also used piecewise by the pipeline.
// IF: 1 + translation extra + I-cache read (0 hit / penalty miss).
// MEM: plain 1; load 1 + extra + D-cache read; store extra + memory write
// cycles (write misses are counted but a store always pays the write-
// through cost and nothing more).
uint64_t if_stage_cycles(TimingState& ts, const trace::TraceRecord& r);
uint64_t mem_stage_cycles(TimingState& ts, const trace::TraceRecord& r);

struct TimingOptions {
    bool forwarding = true;          // test hook; disabling may only slow runs
    std::ostream* retire_log = nullptr; // "instr_no cycle" per retirement
};

struct TimingResult {
    CounterSet counters;
    uint64_t cycles = 0;
    uint64_t instret = 0;
};

// Five-stage in-order pipeline (IF ID EX MEM WB) with stage locking, full
// forwarding, branches resolved in ID under an assume-not-taken policy, and
// a single D-cache port arbitrated between MEM data accesses and IF page-
// table reads (MEM wins ties, a started access is never preempted).
class PipelineSim {
public:
    PipelineSim(TimingState& ts, const TimingOptions& opts);

    // Consumes the source to exhaustion and returns cycles/instret plus a
    // copy of the final counters.
    TimingResult run(trace::Source& source);

private:
    TimingState& ts_;
    TimingOptions opts_;
};

// One-call wrapper: fresh TimingState, one pipeline pass.
TimingResult simulate(trace::Source& source, const SimConfig& cfg,
                      const image::PageTableSet& tables,
                      const image::RegionMap& rmap,
                      const TimingOptions& opts = {});

} // namespace hvsim::timing
