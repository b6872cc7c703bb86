#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace hvsim {

// Processor operating modes. The virtualization bit and the privilege bits
// that appear in trace records are derived from these via mode_v/mode_prv.
enum class Mode : uint8_t {
    User,     // v=0 prv=00, user programs on a non-virtualized system
    VirtUser, // v=1 prv=00, user programs under a hypervisor
    VirtSup,  // v=1 prv=01, the guest operating system
    HypSup,   // v=0 prv=01, hypervisor (or bare-metal OS)
    Machine,  // v=0 prv=11
};

// Address-space quarters. User and VirtUser share the lowest quarter, so
// there is one region fewer than there are modes.
enum class Region : uint8_t { User = 0, VirtSup = 1, HypSup = 2, Machine = 3 };

inline constexpr size_t kRegionCount = 4;

uint8_t mode_v(Mode m);
uint8_t mode_prv(Mode m);
// Reconstructs a mode from its (v, prv) encoding; rejects illegal pairs.
Mode mode_from_bits(uint8_t v, uint8_t prv);
bool mode_bits_legal(uint8_t v, uint8_t prv);
const char* mode_name(Mode m);
const char* region_name(Region r);
Region region_for_mode(Mode m);

// Inclusive address interval [lo, hi].
struct AddrRange {
    uint32_t lo = 0;
    uint32_t hi = 0;

    bool contains(uint32_t a) const { return a >= lo && a <= hi; }
    uint64_t size() const { return uint64_t(hi) - lo + 1; }
    bool operator==(const AddrRange&) const = default;
};

// The three address spaces seen by one region: guest-virtual, guest-physical
// and host-physical. On a non-virtualized system guest-physical is simply an
// alias of host-physical.
struct RegionLayout {
    AddrRange virt;
    AddrRange guest_phys;
    AddrRange host_phys;

    bool operator==(const RegionLayout&) const = default;
};

// The built-in address map: one 1 GiB quarter per region, with identical
// guest-physical and host-physical quarters arranged so that translation is
// a fixed offset per region.
std::array<RegionLayout, kRegionCount> default_regions();

// Full simulation configuration. Defaults reproduce the reference machine:
// 100-cycle memory penalties, 4096-block direct-mapped split caches,
// 16-entry split TLBs, 4 KiB pages, and the four-quarter address map.
struct SimConfig {
    bool virtualized = false;

    // Miss penalties and memory-write latency, in cycles.
    uint32_t icache_read_miss_penalty = 100;
    uint32_t dcache_pte_read_miss_penalty = 100;
    uint32_t dcache_data_read_miss_penalty = 100;
    uint32_t dcache_data_write_miss_penalty = 100;
    uint32_t memory_write_cycles = 100;

    // Cache and TLB geometry. Blocks hold a single 32-bit word.
    uint32_t icache_blocks = 4096;
    uint32_t dcache_blocks = 4096;
    uint32_t itlb_entries = 16;
    uint32_t dtlb_entries = 16;

    // Word and address shape. The simulator core assumes these values and
    // validation rejects anything else; they are spelled out here so that a
    // configuration file documents the whole machine.
    uint32_t data_size_bits = 32;
    uint32_t byte_offset_bits = 2;
    uint32_t page_offset_bits = 12;
    uint32_t pte_size_bytes = 4;
    uint32_t virtual_address_bits = 32;
    uint32_t guest_physical_address_bits = 32;
    uint32_t host_physical_address_bits = 32;

    // Fixed per-stage costs. IF and MEM have a base cost of one cycle plus
    // whatever the caches and TLBs add.
    uint32_t id_stage_cycles = 1;
    uint32_t ex_stage_cycles = 1;
    uint32_t wb_stage_cycles = 1;

    // Address-space quarters, indexed by Region.
    std::array<RegionLayout, kRegionCount> regions = default_regions();

    // Memory-mapped console port. An exact-address store lands in the
    // console buffer instead of memory.
    uint32_t console_addr = 0x80030000;

    // Host-physical base of each region's page table, indexed by Region.
    // The bases are staggered modulo the data-cache span so that the four
    // tables occupy disjoint direct-mapped sets; 16 KiB-aligned tables would
    // place every region's page-N entry in the same cache block and make
    // concurrent walks evict each other on every trap.
    std::array<uint32_t, kRegionCount> page_table_base{
        0x00100000, 0x00104180, 0x00108300, 0x0010C480};

    // Trap-vector reset values and the user-program entry point.
    uint32_t vstvec_reset = 0x40000000;
    uint32_t stvec_reset = 0x80000000;
    uint32_t mtvec_reset = 0xC0000000;
    uint32_t user_entry = 0x00010000;

    // Per-region area sizes: code at the region base, data after it, with
    // the stack occupying the top of the data area.
    uint32_t code_area_bytes = 0x20000;
    uint32_t data_area_bytes = 0x40000;
    uint32_t stack_area_bytes = 0x10000;

    // Run limits and plumbing.
    uint64_t max_instructions = 1000000;
    uint32_t channel_capacity = 1024;

    // I/O paths, normally populated from the command line.
    std::string program;
    std::string trace_out;
    std::string trace_in;
    std::string stats_out;
    std::string retire_log;

    uint32_t page_size() const { return 1u << page_offset_bits; }
    const RegionLayout& region(Region r) const {
        return regions[size_t(r)];
    }
};

// Parses "key = value" configuration text. '#' starts a comment. Unknown
// keys and malformed values raise Error{Config}. The result is validated.
SimConfig parse_config(std::string_view text);
SimConfig load_config_file(const std::string& path);

// Checks structural invariants: power-of-two cache/TLB geometry, the
// four-quarter partition of the virtual address space, page-aligned ranges,
// and area sizes that fit their region. Raises Error{Config} on violation.
void validate_config(const SimConfig& cfg);

// Renders a configuration as parseable "key = value" text.
std::string render_config(const SimConfig& cfg);

} // namespace hvsim
