#include "hvsim/image.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "hvsim/error.hpp"

namespace hvsim::image {

RegionMap::RegionMap(const SimConfig& cfg)
    : layout_(cfg.regions),
      page_size_(cfg.page_size()),
      page_offset_bits_(cfg.page_offset_bits) {}

Region RegionMap::region_of(uint32_t va) const {
    for (size_t i = 0; i < kRegionCount; ++i)
        if (layout_[i].virt.contains(va)) return Region(i);
    // Unreachable for a validated config: the quarters tile the space.
    throw Error(ErrorKind::Image, "address outside every region");
}

uint32_t RegionMap::va_to_hpa(uint32_t va) const {
    const RegionLayout& lay = layout_[size_t(region_of(va))];
    return va - lay.virt.lo + lay.host_phys.lo; // wraps mod 2^32 by design
}

uint32_t RegionMap::va_to_gpa(uint32_t va) const {
    const RegionLayout& lay = layout_[size_t(region_of(va))];
    return va - lay.virt.lo + lay.guest_phys.lo;
}

uint32_t RegionMap::hpa_to_va(uint32_t hpa) const {
    for (const RegionLayout& lay : layout_)
        if (lay.host_phys.contains(hpa))
            return hpa - lay.host_phys.lo + lay.virt.lo;
    throw Error(ErrorKind::Image, "host-physical address outside every region");
}

const char* area_kind_name(AreaKind k) {
    switch (k) {
    case AreaKind::Code: return "code";
    case AreaKind::Data: return "data";
    case AreaKind::Stack: return "stack";
    case AreaKind::PageTable: return "page-table";
    }
    return "?";
}

uint8_t* MemoryImage::chunk_for(uint32_t va, bool create) {
    uint32_t key = va & ~(kChunkBytes - 1);
    auto it = pages_.find(key);
    if (it == pages_.end()) {
        if (!create) return nullptr;
        it = pages_.emplace(key, std::vector<uint8_t>(kChunkBytes, 0)).first;
    }
    return it->second.data();
}

const uint8_t* MemoryImage::chunk_for(uint32_t va) const {
    uint32_t key = va & ~(kChunkBytes - 1);
    auto it = pages_.find(key);
    return it == pages_.end() ? nullptr : it->second.data();
}

uint8_t MemoryImage::read8(uint32_t va) const {
    const uint8_t* chunk = chunk_for(va);
    return chunk ? chunk[va & (kChunkBytes - 1)] : 0;
}

void MemoryImage::write8(uint32_t va, uint8_t value) {
    chunk_for(va, true)[va & (kChunkBytes - 1)] = value;
}

uint16_t MemoryImage::read16(uint32_t va) const {
    return uint16_t(read8(va)) | uint16_t(read8(va + 1)) << 8;
}

uint32_t MemoryImage::read32(uint32_t va) const {
    return uint32_t(read16(va)) | uint32_t(read16(va + 2)) << 16;
}

void MemoryImage::write16(uint32_t va, uint16_t value) {
    write8(va, uint8_t(value));
    write8(va + 1, uint8_t(value >> 8));
}

void MemoryImage::write32(uint32_t va, uint32_t value) {
    write16(va, uint16_t(value));
    write16(va + 2, uint16_t(value >> 16));
}

void MemoryImage::add_area(const Area& area) { areas_.push_back(area); }

std::optional<Area> MemoryImage::area_of(uint32_t va) const {
    for (const Area& a : areas_)
        if (va >= a.base && va < a.end()) return a;
    return std::nullopt;
}

void MemoryImage::dump(std::ostream& out) const {
    char line[160];
    const Area* last = nullptr;
    for (const auto& [key, bytes] : pages_) {
        for (uint32_t row = 0; row < kChunkBytes; row += 16) {
            bool any = false;
            for (uint32_t i = 0; i < 16; ++i)
                if (bytes[row + i]) any = true;
            if (!any) continue;
            uint32_t va = key + row;
            if (auto area = area_of(va)) {
                const Area* found = nullptr;
                for (const Area& a : areas_)
                    if (a.base == area->base && a.kind == area->kind)
                        found = &a;
                if (found && found != last) {
                    std::snprintf(line, sizeof line,
                                  "# %s %s [%08x, %08x)\n",
                                  region_name(found->region),
                                  area_kind_name(found->kind), found->base,
                                  found->end());
                    out << line;
                    last = found;
                }
            }
            std::snprintf(line, sizeof line,
                          "%08x: %08x %08x %08x %08x\n", va,
                          read32(va), read32(va + 4), read32(va + 8),
                          read32(va + 12));
            out << line;
        }
    }
}

MappingRule fixed_offset_rule(const RegionMap& rmap) {
    return [&rmap](Region, uint32_t vpn) -> std::optional<uint32_t> {
        uint32_t va = vpn << rmap.page_offset_bits();
        return rmap.va_to_hpa(va) >> rmap.page_offset_bits();
    };
}

uint32_t default_window_pages(const SimConfig& cfg) {
    return (cfg.code_area_bytes + cfg.data_area_bytes) / cfg.page_size();
}

PageTableSet build_page_tables(const RegionMap& rmap, const SimConfig& cfg,
                               uint32_t window_pages, const MappingRule& rule) {
    PageTableSet set;
    uint32_t pob = rmap.page_offset_bits();
    for (size_t i = 0; i < kRegionCount; ++i) {
        Region region = Region(i);
        const RegionLayout& lay = rmap.layout(region);
        PageTable table;
        table.region = region;
        table.base_hpa = cfg.page_table_base[i];
        table.first_vpn = lay.virt.lo >> pob;
        table.ptes.reserve(window_pages);
        for (uint32_t p = 0; p < window_pages; ++p) {
            uint32_t vpn = table.first_vpn + p;
            std::optional<uint32_t> ppn = rule(region, vpn);
            if (!ppn) {
                table.ptes.push_back(0);
                continue;
            }
            uint32_t hpa = *ppn << pob;
            if (!lay.host_phys.contains(hpa) ||
                !lay.host_phys.contains(hpa + rmap.page_size() - 1)) {
                char msg[96];
                std::snprintf(msg, sizeof msg,
                              "page %08x maps outside its host-physical "
                              "range", vpn << pob);
                throw Error(ErrorKind::Image, msg);
            }
            table.ptes.push_back((*ppn << pob) | kPteValid);
        }
        set.tables[i] = std::move(table);
    }
    return set;
}

PageTableSet build_page_tables(const RegionMap& rmap, const SimConfig& cfg) {
    return build_page_tables(rmap, cfg, default_window_pages(cfg),
                             fixed_offset_rule(rmap));
}

namespace {

struct Extent {
    uint32_t base;
    uint32_t size;
    const char* what;
};

void check_overlap(const std::vector<Extent>& extents) {
    for (size_t i = 0; i < extents.size(); ++i) {
        for (size_t j = i + 1; j < extents.size(); ++j) {
            const Extent& a = extents[i];
            const Extent& b = extents[j];
            if (a.base < b.base + b.size && b.base < a.base + a.size) {
                char msg[160];
                std::snprintf(msg, sizeof msg,
                              "%s at %08x overlaps %s at %08x", b.what,
                              b.base, a.what, a.base);
                throw Error(ErrorKind::Image, msg);
            }
        }
    }
}

} // namespace

MemoryImage compose_image(const std::vector<Placement>& placements,
                          const PageTableSet& tables, const RegionMap& rmap,
                          const SimConfig& cfg) {
    MemoryImage img;
    std::vector<Extent> extents;

    for (const Placement& p : placements) {
        if (p.kind != AreaKind::Code && p.kind != AreaKind::Data)
            throw Error(ErrorKind::Image,
                        "placements must target code or data areas");
        const RegionLayout& lay = rmap.layout(p.region);
        uint32_t area_lo, area_hi; // [lo, hi)
        if (p.kind == AreaKind::Code) {
            area_lo = lay.virt.lo;
            area_hi = lay.virt.lo + cfg.code_area_bytes;
        } else {
            area_lo = lay.virt.lo + cfg.code_area_bytes;
            area_hi = lay.virt.lo + cfg.code_area_bytes +
                      cfg.data_area_bytes - cfg.stack_area_bytes;
        }
        if (p.blob.words.empty())
            throw Error(ErrorKind::Image, "empty placement");
        if (p.blob.base < area_lo || p.blob.end() > area_hi) {
            char msg[128];
            std::snprintf(msg, sizeof msg,
                          "blob [%08x, %08x) does not fit the %s %s area",
                          p.blob.base, p.blob.end(), region_name(p.region),
                          area_kind_name(p.kind));
            throw Error(ErrorKind::Image, msg);
        }
        uint32_t size = uint32_t(4 * p.blob.words.size());
        img.add_area({p.region, p.kind, p.blob.base, size});
        extents.push_back({p.blob.base, size, "placement"});
        for (size_t i = 0; i < p.blob.words.size(); ++i)
            img.write32(p.blob.base + uint32_t(4 * i), p.blob.words[i]);
    }

    for (size_t i = 0; i < kRegionCount; ++i) {
        const RegionLayout& lay = rmap.layout(Region(i));
        uint32_t top = lay.virt.lo + cfg.code_area_bytes + cfg.data_area_bytes;
        Area stack{Region(i), AreaKind::Stack, top - cfg.stack_area_bytes,
                   cfg.stack_area_bytes};
        img.add_area(stack);
        extents.push_back({stack.base, stack.size, "stack area"});
    }

    for (size_t i = 0; i < kRegionCount; ++i) {
        const PageTable& table = tables.tables[i];
        if (table.ptes.empty()) continue;
        uint32_t va = rmap.hpa_to_va(table.base_hpa);
        uint32_t size = uint32_t(4 * table.ptes.size());
        img.add_area({Region::Machine, AreaKind::PageTable, va, size});
        extents.push_back({va, size, "page table"});
        for (size_t p = 0; p < table.ptes.size(); ++p)
            img.write32(va + uint32_t(4 * p), table.ptes[p]);
    }

    check_overlap(extents);
    return img;
}

namespace {

[[noreturn]] void elf_fail(const std::string& what) {
    throw Error(ErrorKind::Elf, "elf: " + what);
}

uint32_t elf_u32(std::span<const uint8_t> file, size_t off) {
    if (off + 4 > file.size()) elf_fail("truncated file");
    return uint32_t(file[off]) | uint32_t(file[off + 1]) << 8 |
           uint32_t(file[off + 2]) << 16 | uint32_t(file[off + 3]) << 24;
}

uint16_t elf_u16(std::span<const uint8_t> file, size_t off) {
    if (off + 2 > file.size()) elf_fail("truncated file");
    return uint16_t(file[off] | file[off + 1] << 8);
}

} // namespace

ElfImage load_elf(std::span<const uint8_t> file) {
    if (file.size() < 52) elf_fail("truncated file");
    if (file[0] != 0x7F || file[1] != 'E' || file[2] != 'L' || file[3] != 'F')
        elf_fail("bad magic");
    if (file[4] != 1) elf_fail("not a 32-bit binary");
    if (file[5] != 1) elf_fail("not little-endian");

    uint16_t type = elf_u16(file, 16);
    uint16_t machine = elf_u16(file, 18);
    if (type != 2) elf_fail("not a static executable");
    if (machine != 243) elf_fail("not an rv32 binary");

    ElfImage img;
    img.entry = elf_u32(file, 24);
    uint32_t phoff = elf_u32(file, 28);
    uint16_t phentsize = elf_u16(file, 42);
    uint16_t phnum = elf_u16(file, 44);
    if (phnum == 0) elf_fail("no program headers");
    if (phentsize < 32) elf_fail("bad program header size");

    for (uint16_t i = 0; i < phnum; ++i) {
        size_t ph = size_t(phoff) + size_t(i) * phentsize;
        uint32_t p_type = elf_u32(file, ph + 0);
        if (p_type != 1) continue; // PT_LOAD only
        uint32_t p_offset = elf_u32(file, ph + 4);
        uint32_t p_vaddr = elf_u32(file, ph + 8);
        uint32_t p_filesz = elf_u32(file, ph + 16);
        uint32_t p_memsz = elf_u32(file, ph + 20);
        if (p_memsz < p_filesz) elf_fail("segment memsz below filesz");
        if (size_t(p_offset) + p_filesz > file.size())
            elf_fail("segment data past end of file");
        ElfSegment seg;
        seg.vaddr = p_vaddr;
        seg.memsz = p_memsz;
        seg.bytes.assign(file.begin() + p_offset,
                         file.begin() + p_offset + p_filesz);
        img.segments.push_back(std::move(seg));
    }
    if (img.segments.empty()) elf_fail("no loadable segments");
    return img;
}

} // namespace hvsim::image
