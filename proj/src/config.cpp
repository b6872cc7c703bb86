#include "hvsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hvsim/error.hpp"

namespace hvsim {

uint8_t mode_v(Mode m) {
    return (m == Mode::VirtUser || m == Mode::VirtSup) ? 1 : 0;
}

uint8_t mode_prv(Mode m) {
    switch (m) {
    case Mode::User:
    case Mode::VirtUser: return 0;
    case Mode::VirtSup:
    case Mode::HypSup: return 1;
    case Mode::Machine: return 3;
    }
    return 0;
}

bool mode_bits_legal(uint8_t v, uint8_t prv) {
    if (v > 1 || prv > 3) return false;
    if (v == 0) return prv == 0 || prv == 1 || prv == 3;
    return prv == 0 || prv == 1; // no virtualized machine mode
}

Mode mode_from_bits(uint8_t v, uint8_t prv) {
    if (!mode_bits_legal(v, prv))
        throw Error(ErrorKind::Program,
                    "illegal mode bits v=" + std::to_string(v) +
                        " prv=" + std::to_string(prv));
    if (v == 1) return prv == 0 ? Mode::VirtUser : Mode::VirtSup;
    if (prv == 0) return Mode::User;
    return prv == 1 ? Mode::HypSup : Mode::Machine;
}

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::User: return "U";
    case Mode::VirtUser: return "VU";
    case Mode::VirtSup: return "VS";
    case Mode::HypSup: return "HS";
    case Mode::Machine: return "M";
    }
    return "?";
}

const char* region_name(Region r) {
    switch (r) {
    case Region::User: return "user";
    case Region::VirtSup: return "vs";
    case Region::HypSup: return "hs";
    case Region::Machine: return "machine";
    }
    return "?";
}

Region region_for_mode(Mode m) {
    switch (m) {
    case Mode::User:
    case Mode::VirtUser: return Region::User;
    case Mode::VirtSup: return Region::VirtSup;
    case Mode::HypSup: return Region::HypSup;
    case Mode::Machine: return Region::Machine;
    }
    return Region::Machine;
}

std::array<RegionLayout, kRegionCount> default_regions() {
    auto quarter = [](uint32_t base) {
        return AddrRange{base, base + 0x3FFFFFFFu};
    };
    std::array<RegionLayout, kRegionCount> r{};
    // User programs run in the low quarter but live in the top of host
    // memory; each privileged layer sits one quarter below the last.
    r[size_t(Region::User)] = {quarter(0x00000000), quarter(0xC0000000),
                               quarter(0xC0000000)};
    r[size_t(Region::VirtSup)] = {quarter(0x40000000), quarter(0x80000000),
                                  quarter(0x80000000)};
    r[size_t(Region::HypSup)] = {quarter(0x80000000), quarter(0x40000000),
                                 quarter(0x40000000)};
    r[size_t(Region::Machine)] = {quarter(0xC0000000), quarter(0x00000000),
                                  quarter(0x00000000)};
    return r;
}

namespace {

[[noreturn]] void config_fail(size_t line, const std::string& what) {
    throw Error(ErrorKind::Config,
                "config line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(uint8_t(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(uint8_t(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_u64_value(std::string_view s, uint64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
        if (s.empty()) return false;
    }
    uint64_t value = 0;
    for (char c : s) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else return false;
        if (value > (UINT64_MAX - uint64_t(digit)) / base) return false;
        value = value * base + uint64_t(digit);
    }
    out = value;
    return true;
}

uint64_t need_u64(std::string_view s, size_t line) {
    uint64_t v;
    if (!parse_u64_value(s, v)) config_fail(line, "bad numeric value");
    return v;
}

uint32_t need_u32(std::string_view s, size_t line) {
    uint64_t v = need_u64(s, line);
    if (v > UINT32_MAX) config_fail(line, "value does not fit in 32 bits");
    return uint32_t(v);
}

bool need_bool(std::string_view s, size_t line) {
    s = trim(s);
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    config_fail(line, "bad boolean value");
}

AddrRange need_range(std::string_view s, size_t line) {
    size_t colon = s.find(':');
    if (colon == std::string_view::npos)
        config_fail(line, "address range must be LO:HI");
    AddrRange r{need_u32(s.substr(0, colon), line),
                need_u32(s.substr(colon + 1), line)};
    if (r.lo > r.hi) config_fail(line, "address range is inverted");
    return r;
}

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct RegionKey {
    const char* prefix;
    Region region;
};

constexpr RegionKey kRegionKeys[] = {
    {"u_mode", Region::User},
    {"vs_mode", Region::VirtSup},
    {"hs_mode", Region::HypSup},
    {"m_mode", Region::Machine},
};

} // namespace

SimConfig parse_config(std::string_view text) {
    SimConfig cfg;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            config_fail(line_no, "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) config_fail(line_no, "empty key");
        if (value.empty()) config_fail(line_no, "empty value");

        if (key == "virtualized") { cfg.virtualized = need_bool(value, line_no); continue; }
        if (key == "icache_read_miss_penalty") { cfg.icache_read_miss_penalty = need_u32(value, line_no); continue; }
        if (key == "dcache_pte_read_miss_penalty") { cfg.dcache_pte_read_miss_penalty = need_u32(value, line_no); continue; }
        if (key == "dcache_data_read_miss_penalty") { cfg.dcache_data_read_miss_penalty = need_u32(value, line_no); continue; }
        if (key == "dcache_data_write_miss_penalty") { cfg.dcache_data_write_miss_penalty = need_u32(value, line_no); continue; }
        if (key == "memory_write_cycles") { cfg.memory_write_cycles = need_u32(value, line_no); continue; }
        if (key == "icache_blocks") { cfg.icache_blocks = need_u32(value, line_no); continue; }
        if (key == "dcache_blocks") { cfg.dcache_blocks = need_u32(value, line_no); continue; }
        if (key == "itlb_entries") { cfg.itlb_entries = need_u32(value, line_no); continue; }
        if (key == "dtlb_entries") { cfg.dtlb_entries = need_u32(value, line_no); continue; }
        if (key == "data_size_bits") { cfg.data_size_bits = need_u32(value, line_no); continue; }
        if (key == "byte_offset_bits") { cfg.byte_offset_bits = need_u32(value, line_no); continue; }
        if (key == "page_offset_bits") { cfg.page_offset_bits = need_u32(value, line_no); continue; }
        if (key == "pte_size_bytes") { cfg.pte_size_bytes = need_u32(value, line_no); continue; }
        if (key == "virtual_address_bits") { cfg.virtual_address_bits = need_u32(value, line_no); continue; }
        if (key == "guest_physical_address_bits") { cfg.guest_physical_address_bits = need_u32(value, line_no); continue; }
        if (key == "host_physical_address_bits") { cfg.host_physical_address_bits = need_u32(value, line_no); continue; }
        if (key == "id_stage_cycles") { cfg.id_stage_cycles = need_u32(value, line_no); continue; }
        if (key == "ex_stage_cycles") { cfg.ex_stage_cycles = need_u32(value, line_no); continue; }
        if (key == "wb_stage_cycles") { cfg.wb_stage_cycles = need_u32(value, line_no); continue; }
        if (key == "console_addr") { cfg.console_addr = need_u32(value, line_no); continue; }
        if (key == "vstvec_reset") { cfg.vstvec_reset = need_u32(value, line_no); continue; }
        if (key == "stvec_reset") { cfg.stvec_reset = need_u32(value, line_no); continue; }
        if (key == "mtvec_reset") { cfg.mtvec_reset = need_u32(value, line_no); continue; }
        if (key == "user_entry") { cfg.user_entry = need_u32(value, line_no); continue; }
        if (key == "code_area_bytes") { cfg.code_area_bytes = need_u32(value, line_no); continue; }
        if (key == "data_area_bytes") { cfg.data_area_bytes = need_u32(value, line_no); continue; }
        if (key == "stack_area_bytes") { cfg.stack_area_bytes = need_u32(value, line_no); continue; }
        if (key == "max_instructions") { cfg.max_instructions = need_u64(value, line_no); continue; }
        if (key == "channel_capacity") { cfg.channel_capacity = need_u32(value, line_no); continue; }

        bool matched = false;
        for (const auto& rk : kRegionKeys) {
            std::string p(rk.prefix);
            RegionLayout& lay = cfg.regions[size_t(rk.region)];
            if (key == p + "_virtual_address_range") {
                lay.virt = need_range(value, line_no);
                matched = true;
            } else if (key == p + "_guest_physical_address_range") {
                lay.guest_phys = need_range(value, line_no);
                matched = true;
            } else if (key == p + "_host_physical_address_range") {
                lay.host_phys = need_range(value, line_no);
                matched = true;
            } else if (key == p + "_page_table_base") {
                cfg.page_table_base[size_t(rk.region)] = need_u32(value, line_no);
                matched = true;
            }
            if (matched) break;
        }
        if (!matched) config_fail(line_no, "unknown key '" + key + "'");
    }

    validate_config(cfg);
    return cfg;
}

SimConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Config, "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorKind::Config, "invalid config: " + what);
}

bool ranges_overlap(const AddrRange& a, const AddrRange& b) {
    return a.lo <= b.hi && b.lo <= a.hi;
}

} // namespace

void validate_config(const SimConfig& cfg) {
    if (!is_pow2(cfg.icache_blocks)) invalid("icache_blocks must be a power of two");
    if (!is_pow2(cfg.dcache_blocks)) invalid("dcache_blocks must be a power of two");
    if (!is_pow2(cfg.itlb_entries)) invalid("itlb_entries must be a power of two");
    if (!is_pow2(cfg.dtlb_entries)) invalid("dtlb_entries must be a power of two");

    // The core is written against a fixed word and address shape; the keys
    // exist so a config file states the whole machine, but only the native
    // values are accepted.
    if (cfg.data_size_bits != 32) invalid("data_size_bits must be 32");
    if (cfg.byte_offset_bits != 2) invalid("byte_offset_bits must be 2");
    if (cfg.pte_size_bytes != 4) invalid("pte_size_bytes must be 4");
    if (cfg.virtual_address_bits != 32) invalid("virtual_address_bits must be 32");
    if (cfg.guest_physical_address_bits != 32) invalid("guest_physical_address_bits must be 32");
    if (cfg.host_physical_address_bits != 32) invalid("host_physical_address_bits must be 32");
    if (cfg.page_offset_bits < 4 || cfg.page_offset_bits > 20)
        invalid("page_offset_bits out of range");

    if (cfg.id_stage_cycles < 1 || cfg.ex_stage_cycles < 1 || cfg.wb_stage_cycles < 1)
        invalid("stage cycle counts must be at least 1");
    if (cfg.icache_read_miss_penalty < 1 || cfg.dcache_pte_read_miss_penalty < 1 ||
        cfg.dcache_data_read_miss_penalty < 1 || cfg.memory_write_cycles < 1)
        invalid("miss penalties and memory write cycles must be at least 1");

    uint32_t page = cfg.page_size();

    // The four virtual quarters must tile the whole 32-bit space.
    std::array<const RegionLayout*, kRegionCount> by_lo{};
    for (size_t i = 0; i < kRegionCount; ++i) by_lo[i] = &cfg.regions[i];
    std::sort(by_lo.begin(), by_lo.end(),
              [](const RegionLayout* a, const RegionLayout* b) {
                  return a->virt.lo < b->virt.lo;
              });
    if (by_lo[0]->virt.lo != 0)
        invalid("virtual ranges must start at address 0");
    for (size_t i = 0; i + 1 < kRegionCount; ++i) {
        if (by_lo[i]->virt.hi == UINT32_MAX ||
            by_lo[i]->virt.hi + 1 != by_lo[i + 1]->virt.lo)
            invalid("virtual ranges must partition the address space");
    }
    if (by_lo[kRegionCount - 1]->virt.hi != UINT32_MAX)
        invalid("virtual ranges must end at address 0xffffffff");

    for (size_t i = 0; i < kRegionCount; ++i) {
        const RegionLayout& lay = cfg.regions[i];
        if (lay.virt.lo % page != 0 || (lay.virt.hi + 1) % page != 0)
            invalid("virtual range is not page aligned");
        if (lay.virt.size() != lay.host_phys.size() ||
            lay.virt.size() != lay.guest_phys.size())
            invalid("virtual, guest-physical and host-physical ranges must "
                    "have equal sizes");
        if (lay.host_phys.lo % page != 0)
            invalid("host-physical range is not page aligned");
        for (size_t j = i + 1; j < kRegionCount; ++j) {
            if (ranges_overlap(lay.host_phys, cfg.regions[j].host_phys))
                invalid("host-physical ranges overlap");
            if (ranges_overlap(lay.guest_phys, cfg.regions[j].guest_phys))
                invalid("guest-physical ranges overlap");
        }
    }

    uint64_t window = uint64_t(cfg.code_area_bytes) + cfg.data_area_bytes;
    if (cfg.code_area_bytes == 0 || cfg.code_area_bytes % page != 0)
        invalid("code_area_bytes must be a nonzero page multiple");
    if (cfg.data_area_bytes == 0 || cfg.data_area_bytes % page != 0)
        invalid("data_area_bytes must be a nonzero page multiple");
    if (cfg.stack_area_bytes == 0 || cfg.stack_area_bytes % page != 0 ||
        cfg.stack_area_bytes > cfg.data_area_bytes)
        invalid("stack_area_bytes must be a page multiple within the data area");
    for (const RegionLayout& lay : cfg.regions)
        if (window > lay.virt.size())
            invalid("code + data areas exceed a region");

    const RegionLayout& user = cfg.region(Region::User);
    if (cfg.user_entry % 4 != 0) invalid("user_entry must be word aligned");
    if (cfg.user_entry < user.virt.lo ||
        cfg.user_entry >= user.virt.lo + cfg.code_area_bytes)
        invalid("user_entry must sit in the user code area");

    auto check_tvec = [&](uint32_t tvec, Region region, const char* name) {
        const RegionLayout& lay = cfg.region(region);
        if (tvec % 4 != 0)
            invalid(std::string(name) + " must be word aligned");
        if (tvec < lay.virt.lo || tvec >= lay.virt.lo + cfg.code_area_bytes)
            invalid(std::string(name) + " must sit in its region's code area");
    };
    check_tvec(cfg.vstvec_reset, Region::VirtSup, "vstvec_reset");
    check_tvec(cfg.stvec_reset, Region::HypSup, "stvec_reset");
    check_tvec(cfg.mtvec_reset, Region::Machine, "mtvec_reset");

    // The console port must live in a mapped data page of some region.
    bool console_ok = false;
    for (const RegionLayout& lay : cfg.regions) {
        if (cfg.console_addr >= lay.virt.lo + cfg.code_area_bytes &&
            uint64_t(cfg.console_addr) < uint64_t(lay.virt.lo) + window)
            console_ok = true;
    }
    if (!console_ok) invalid("console_addr must fall in a mapped data area");

    // Page tables live in the Machine quarter of host-physical memory.
    const AddrRange& mhost = cfg.region(Region::Machine).host_phys;
    uint64_t table_bytes = (window / page) * 4;
    for (size_t i = 0; i < kRegionCount; ++i) {
        uint64_t base = cfg.page_table_base[i];
        if (base % 4 != 0) invalid("page table base must be word aligned");
        if (base < mhost.lo || base + table_bytes - 1 > mhost.hi)
            invalid("page table must sit in machine host-physical memory");
        for (size_t j = i + 1; j < kRegionCount; ++j) {
            uint64_t other = cfg.page_table_base[j];
            if (base < other + table_bytes && other < base + table_bytes)
                invalid("page tables overlap");
        }
    }

    if (cfg.max_instructions == 0) invalid("max_instructions must be nonzero");
    if (cfg.channel_capacity == 0) invalid("channel_capacity must be nonzero");
}

namespace {

std::string hex32(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

} // namespace

std::string render_config(const SimConfig& cfg) {
    std::ostringstream out;
    out << "virtualized = " << (cfg.virtualized ? 1 : 0) << "\n";
    out << "icache_read_miss_penalty = " << cfg.icache_read_miss_penalty << "\n";
    out << "dcache_pte_read_miss_penalty = " << cfg.dcache_pte_read_miss_penalty << "\n";
    out << "dcache_data_read_miss_penalty = " << cfg.dcache_data_read_miss_penalty << "\n";
    out << "dcache_data_write_miss_penalty = " << cfg.dcache_data_write_miss_penalty << "\n";
    out << "memory_write_cycles = " << cfg.memory_write_cycles << "\n";
    out << "icache_blocks = " << cfg.icache_blocks << "\n";
    out << "dcache_blocks = " << cfg.dcache_blocks << "\n";
    out << "itlb_entries = " << cfg.itlb_entries << "\n";
    out << "dtlb_entries = " << cfg.dtlb_entries << "\n";
    out << "data_size_bits = " << cfg.data_size_bits << "\n";
    out << "byte_offset_bits = " << cfg.byte_offset_bits << "\n";
    out << "page_offset_bits = " << cfg.page_offset_bits << "\n";
    out << "pte_size_bytes = " << cfg.pte_size_bytes << "\n";
    out << "virtual_address_bits = " << cfg.virtual_address_bits << "\n";
    out << "guest_physical_address_bits = " << cfg.guest_physical_address_bits << "\n";
    out << "host_physical_address_bits = " << cfg.host_physical_address_bits << "\n";
    out << "id_stage_cycles = " << cfg.id_stage_cycles << "\n";
    out << "ex_stage_cycles = " << cfg.ex_stage_cycles << "\n";
    out << "wb_stage_cycles = " << cfg.wb_stage_cycles << "\n";
    for (const auto& rk : kRegionKeys) {
        const RegionLayout& lay = cfg.regions[size_t(rk.region)];
        out << rk.prefix << "_virtual_address_range = "
            << hex32(lay.virt.lo) << ":" << hex32(lay.virt.hi) << "\n";
        out << rk.prefix << "_guest_physical_address_range = "
            << hex32(lay.guest_phys.lo) << ":" << hex32(lay.guest_phys.hi) << "\n";
        out << rk.prefix << "_host_physical_address_range = "
            << hex32(lay.host_phys.lo) << ":" << hex32(lay.host_phys.hi) << "\n";
        out << rk.prefix << "_page_table_base = "
            << hex32(cfg.page_table_base[size_t(rk.region)]) << "\n";
    }
    out << "console_addr = " << hex32(cfg.console_addr) << "\n";
    out << "vstvec_reset = " << hex32(cfg.vstvec_reset) << "\n";
    out << "stvec_reset = " << hex32(cfg.stvec_reset) << "\n";
    out << "mtvec_reset = " << hex32(cfg.mtvec_reset) << "\n";
    out << "user_entry = " << hex32(cfg.user_entry) << "\n";
    out << "code_area_bytes = " << hex32(cfg.code_area_bytes) << "\n";
    out << "data_area_bytes = " << hex32(cfg.data_area_bytes) << "\n";
    out << "stack_area_bytes = " << hex32(cfg.stack_area_bytes) << "\n";
    out << "max_instructions = " << cfg.max_instructions << "\n";
    out << "channel_capacity = " << cfg.channel_capacity << "\n";
    return out.str();
}

} // namespace hvsim
