#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hvsim/asm_kit.hpp"
#include "hvsim/config.hpp"

namespace hvsim::image {

// Translation geometry of the four-quarter address map. Each region owns a
// virtual quarter, a guest-physical quarter and a host-physical quarter of
// equal size; guest virtual -> host physical is a fixed per-region offset.
class RegionMap {
public:
    explicit RegionMap(const SimConfig& cfg);

    // Every 32-bit address falls in exactly one region.
    Region region_of(uint32_t va) const;
    const RegionLayout& layout(Region r) const { return layout_[size_t(r)]; }

    // Fixed-offset mappings. Offsets are mod 2^32, so the low quarter can
    // map to the high one by wraparound.
    uint32_t va_to_hpa(uint32_t va) const;
    uint32_t hpa_to_va(uint32_t hpa) const; // inverse within the hpa quarter
    uint32_t va_to_gpa(uint32_t va) const;

    uint32_t page_size() const { return page_size_; }
    uint32_t page_offset_bits() const { return page_offset_bits_; }

private:
    std::array<RegionLayout, kRegionCount> layout_;
    uint32_t page_size_;
    uint32_t page_offset_bits_;
};

// What a byte range inside a region is used for.
enum class AreaKind { Code, Data, Stack, PageTable };
const char* area_kind_name(AreaKind k);

struct Area {
    Region region;
    AreaKind kind;
    uint32_t base = 0;   // virtual address
    uint32_t size = 0;   // bytes

    uint32_t end() const { return base + size; }
};

// Sparse byte-addressed memory, indexed by virtual address. Unwritten
// locations read as zero. Multi-byte accessors are little-endian and do not
// require alignment (alignment policy lives in the execution core).
class MemoryImage {
public:
    uint8_t read8(uint32_t va) const;
    uint16_t read16(uint32_t va) const;
    uint32_t read32(uint32_t va) const;
    void write8(uint32_t va, uint8_t value);
    void write16(uint32_t va, uint16_t value);
    void write32(uint32_t va, uint32_t value);

    const std::vector<Area>& areas() const { return areas_; }
    void add_area(const Area& area);
    // The area covering an address, if any.
    std::optional<Area> area_of(uint32_t va) const;

    // Address-sorted hex dump of all written words, annotated with area
    // boundaries. Debugging aid for the CLI.
    void dump(std::ostream& out) const;

    size_t page_count() const { return pages_.size(); }

private:
    static constexpr uint32_t kChunkBytes = 4096;
    uint8_t* chunk_for(uint32_t va, bool create);
    const uint8_t* chunk_for(uint32_t va) const;

    std::map<uint32_t, std::vector<uint8_t>> pages_;
    std::vector<Area> areas_;
};

// One region's single-level page table: PTEs for a contiguous window of
// virtual pages starting at first_vpn. A PTE is (ppn << 12) | valid.
struct PageTable {
    Region region;
    uint32_t base_hpa = 0;   // host-physical address of entry 0
    uint32_t first_vpn = 0;
    std::vector<uint32_t> ptes;

    uint32_t pte_addr(uint32_t vpn) const {
        return base_hpa + 4 * (vpn - first_vpn);
    }
    bool covers(uint32_t vpn) const {
        return vpn >= first_vpn && vpn < first_vpn + ptes.size();
    }
};

struct PageTableSet {
    std::array<PageTable, kRegionCount> tables;

    const PageTable& for_region(Region r) const { return tables[size_t(r)]; }
};

inline constexpr uint32_t kPteValid = 1;

// VPN -> PPN policy used when building tables. Returning nullopt leaves the
// page unmapped (PTE valid bit clear).
using MappingRule = std::function<std::optional<uint32_t>(Region, uint32_t vpn)>;

// The standard rule: fixed per-region offset, derived from the region map.
MappingRule fixed_offset_rule(const RegionMap& rmap);

// Builds one table per region covering `window_pages` pages from the region
// base, applying `rule` to each page. Mapping targets outside the region's
// host-physical quarter raise Error{Image}.
PageTableSet build_page_tables(const RegionMap& rmap, const SimConfig& cfg,
                               uint32_t window_pages, const MappingRule& rule);
PageTableSet build_page_tables(const RegionMap& rmap, const SimConfig& cfg);

// Pages covered by the default window: code area plus data area.
uint32_t default_window_pages(const SimConfig& cfg);

// A blob destined for a particular region and area.
struct Placement {
    asm_kit::CodeBlob blob;
    Region region;
    AreaKind kind; // Code or Data
};

// Lays placements and page tables into a fresh image. Checks that each blob
// sits inside the right area of the right region and overlaps nothing else;
// the tables themselves are materialized in the Machine quarter at the
// virtual alias of their host-physical base. Stack areas are registered for
// every region so the dump and bounds checks know about them.
MemoryImage compose_image(const std::vector<Placement>& placements,
                          const PageTableSet& tables, const RegionMap& rmap,
                          const SimConfig& cfg);

// Minimal static ELF reader for rv32 executables.
struct ElfSegment {
    uint32_t vaddr = 0;
    uint32_t memsz = 0;
    std::vector<uint8_t> bytes; // filesz bytes; the rest is zero-fill
};

struct ElfImage {
    uint32_t entry = 0;
    std::vector<ElfSegment> segments;
};

ElfImage load_elf(std::span<const uint8_t> file);

} // namespace hvsim::image
