#include "hvsim/runner.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "hvsim/asm_kit.hpp"
#include "hvsim/guest.hpp"
#include "hvsim/image.hpp"
#include "hvsim/timing.hpp"
#include "hvsim/trace.hpp"

namespace hvsim::runner {

namespace {

namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Program, "cannot read program file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
    std::string text = read_text_file(path);
    return std::vector<uint8_t>(text.begin(), text.end());
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

uint32_t parse_origin(const std::string& text, const std::string& where) {
    try {
        size_t used = 0;
        unsigned long v = std::stoul(text, &used, 0);
        if (used != text.size() || v > 0xFFFFFFFFul)
            throw std::invalid_argument("range");
        return uint32_t(v);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Program,
                    "bad origin '" + text + "' in " + where);
    }
}

functional::MachineState compose_and_boot(
    const std::vector<image::Placement>& placements, const SimConfig& cfg) {
    image::RegionMap rmap(cfg);
    image::PageTableSet tables = image::build_page_tables(rmap, cfg);
    image::MemoryImage img =
        image::compose_image(placements, tables, rmap, cfg);
    return functional::make_entry_state(std::move(img), cfg);
}

// A single assembly file is treated as the user program, paired with the
// stock OS/hypervisor handlers so its system calls are serviced.
functional::MachineState load_asm_program(const SimConfig& cfg) {
    std::vector<image::Placement> placements;
    asm_kit::CodeBlob user = asm_kit::assemble(read_text_file(cfg.program),
                                               cfg.user_entry);
    placements.push_back({user, Region::User, image::AreaKind::Code});
    placements.push_back({asm_kit::assemble(guest::default_hv_handler(cfg),
                                            cfg.stvec_reset),
                          Region::HypSup, image::AreaKind::Code});
    if (cfg.virtualized)
        placements.push_back({asm_kit::assemble(guest::default_os_handler(cfg),
                                                cfg.vstvec_reset),
                              Region::VirtSup, image::AreaKind::Code});
    return compose_and_boot(placements, cfg);
}

// Manifest format: one "role = path [@ origin]" per line, '#' comments.
// Roles: user (required), user_data, os, hv. Paths are relative to the
// manifest. Missing os/hv fall back to the stock handlers.
functional::MachineState load_manifest_program(const SimConfig& cfg) {
    std::istringstream in(read_text_file(cfg.program));
    fs::path base = fs::path(cfg.program).parent_path();

    struct Entry {
        std::string path;
        std::optional<uint32_t> origin;
    };
    std::map<std::string, Entry> entries;

    std::string line;
    uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string where =
            cfg.program + ":" + std::to_string(line_no);
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Program,
                        "expected 'role = path' in " + where);
        std::string role = trim(line.substr(0, eq));
        std::string rest = trim(line.substr(eq + 1));
        Entry e;
        size_t at = rest.find('@');
        if (at != std::string::npos) {
            e.origin = parse_origin(trim(rest.substr(at + 1)), where);
            rest = trim(rest.substr(0, at));
        }
        if (rest.empty())
            throw Error(ErrorKind::Program, "missing path in " + where);
        e.path = (base / rest).string();
        if (role != "user" && role != "user_data" && role != "os" &&
            role != "hv")
            throw Error(ErrorKind::Program,
                        "unknown role '" + role + "' in " + where);
        if (!entries.emplace(role, e).second)
            throw Error(ErrorKind::Program,
                        "duplicate role '" + role + "' in " + where);
    }
    if (!entries.count("user"))
        throw Error(ErrorKind::Program,
                    "manifest '" + cfg.program + "' defines no user program");

    const RegionLayout& user_region = cfg.region(Region::User);
    auto origin_or = [&](const char* role, uint32_t fallback) {
        auto it = entries.find(role);
        return (it != entries.end() && it->second.origin) ? *it->second.origin
                                                          : fallback;
    };

    std::vector<image::Placement> placements;
    placements.push_back(
        {asm_kit::assemble(read_text_file(entries.at("user").path),
                           origin_or("user", cfg.user_entry)),
         Region::User, image::AreaKind::Code});
    if (entries.count("user_data"))
        placements.push_back(
            {asm_kit::assemble(read_text_file(entries.at("user_data").path),
                               origin_or("user_data",
                                         user_region.virt.lo +
                                             cfg.code_area_bytes)),
             Region::User, image::AreaKind::Data});
    if (entries.count("os"))
        placements.push_back(
            {asm_kit::assemble(read_text_file(entries.at("os").path),
                               origin_or("os", cfg.vstvec_reset)),
             Region::VirtSup, image::AreaKind::Code});
    else if (cfg.virtualized)
        placements.push_back({asm_kit::assemble(guest::default_os_handler(cfg),
                                                cfg.vstvec_reset),
                              Region::VirtSup, image::AreaKind::Code});
    if (entries.count("hv"))
        placements.push_back(
            {asm_kit::assemble(read_text_file(entries.at("hv").path),
                               origin_or("hv", cfg.stvec_reset)),
             Region::HypSup, image::AreaKind::Code});
    else
        placements.push_back({asm_kit::assemble(guest::default_hv_handler(cfg),
                                                cfg.stvec_reset),
                              Region::HypSup, image::AreaKind::Code});
    return compose_and_boot(placements, cfg);
}

functional::MachineState load_elf_program(const SimConfig& cfg) {
    std::vector<uint8_t> bytes = read_binary_file(cfg.program);
    image::ElfImage elf = image::load_elf(bytes);

    SimConfig booted = cfg;
    const RegionLayout& user_region = cfg.region(Region::User);
    uint32_t code_lo = user_region.virt.lo;
    uint32_t code_hi = code_lo + cfg.code_area_bytes;
    if (elf.entry % 4 != 0 || elf.entry < code_lo || elf.entry >= code_hi)
        throw Error(ErrorKind::Elf,
                    "entry point outside the user code area");
    booted.user_entry = elf.entry;

    image::RegionMap rmap(cfg);
    std::vector<image::Placement> placements;
    for (const image::ElfSegment& seg : elf.segments) {
        if (seg.vaddr % 4 != 0)
            throw Error(ErrorKind::Elf, "segment not word-aligned");
        asm_kit::CodeBlob blob;
        blob.base = seg.vaddr;
        blob.words.resize((seg.memsz + 3) / 4, 0);
        for (size_t i = 0; i < seg.bytes.size(); ++i)
            blob.words[i / 4] |= uint32_t(seg.bytes[i]) << (8 * (i % 4));
        Region region = rmap.region_of(seg.vaddr);
        const RegionLayout& layout = cfg.region(region);
        bool in_code = seg.vaddr >= layout.virt.lo &&
                       seg.vaddr < layout.virt.lo + cfg.code_area_bytes;
        placements.push_back({blob, region,
                              in_code ? image::AreaKind::Code
                                      : image::AreaKind::Data});
    }
    placements.push_back({asm_kit::assemble(guest::default_hv_handler(cfg),
                                            cfg.stvec_reset),
                          Region::HypSup, image::AreaKind::Code});
    if (cfg.virtualized)
        placements.push_back({asm_kit::assemble(guest::default_os_handler(cfg),
                                                cfg.vstvec_reset),
                              Region::VirtSup, image::AreaKind::Code});
    return compose_and_boot(placements, booted);
}

// Inserts a tag before the extension: out.trace -> out-virt.trace.
std::string with_tag(const std::string& path, const char* tag) {
    fs::path p(path);
    fs::path stem = p.stem();
    stem += tag;
    stem += p.extension();
    return (p.parent_path() / stem).string();
}

} // namespace

ExitStatus status_for_error_kind(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config:
        return kExitConfig;
    case ErrorKind::Asm:
    case ErrorKind::Elf:
    case ErrorKind::Image:
    case ErrorKind::Program:
    case ErrorKind::UnmappedPage:
        return kExitProgram;
    case ErrorKind::LimitExhausted:
        return kExitLimit;
    case ErrorKind::TruncatedStream:
    case ErrorKind::Trace:
    case ErrorKind::EmptyRun:
        return kExitTrace;
    }
    return kExitUsage;
}

functional::MachineState load_program(const SimConfig& cfg) {
    if (cfg.program.empty())
        throw Error(ErrorKind::Config, "no program specified");
    if (guest::is_fixture_name(cfg.program)) {
        guest::Fixture fx = guest::make_fixture(cfg.program, cfg);
        return guest::build_fixture(fx, cfg);
    }
    std::string ext = fs::path(cfg.program).extension().string();
    if (ext == ".s" || ext == ".asm")
        return load_asm_program(cfg);
    if (ext == ".manifest")
        return load_manifest_program(cfg);
    std::vector<uint8_t> head = read_binary_file(cfg.program);
    if (head.size() >= 4 && head[0] == 0x7F && head[1] == 'E' &&
        head[2] == 'L' && head[3] == 'F')
        return load_elf_program(cfg);
    throw Error(ErrorKind::Program,
                "cannot tell what '" + cfg.program +
                    "' is: expected a fixture name (search, sort), a .s/.asm "
                    "file, a .manifest file, or an ELF executable");
}

RunArtifacts run_experiment(const SimConfig& cfg) {
    validate_config(cfg);
    functional::MachineState state = load_program(cfg);

    image::RegionMap rmap(cfg);
    image::PageTableSet tables = image::build_page_tables(rmap, cfg);

    std::optional<std::ofstream> trace_out;
    if (!cfg.trace_out.empty()) {
        trace_out.emplace(cfg.trace_out, std::ios::binary);
        if (!*trace_out)
            throw Error(ErrorKind::Config,
                        "cannot open trace output '" + cfg.trace_out + "'");
    }
    std::optional<std::ofstream> retire_log;
    timing::TimingOptions opts;
    if (!cfg.retire_log.empty()) {
        retire_log.emplace(cfg.retire_log, std::ios::binary);
        if (!*retire_log)
            throw Error(ErrorKind::Config,
                        "cannot open retire log '" + cfg.retire_log + "'");
        opts.retire_log = &*retire_log;
    }

    trace::ChannelEnds chan = trace::make_channel(cfg.channel_capacity);
    std::exception_ptr producer_error;

    std::thread producer([&] {
        try {
            functional::run(state, cfg.max_instructions,
                            [&](const trace::TraceRecord& r) {
                                if (trace_out)
                                    *trace_out << trace::serialize(r) << '\n';
                                chan.producer.push(r);
                            });
        } catch (...) {
            producer_error = std::current_exception();
        }
        chan.producer.close();
    });

    timing::TimingResult result;
    std::exception_ptr consumer_error;
    trace::ChannelSource source(chan.consumer);
    try {
        result = timing::simulate(source, cfg, tables, rmap, opts);
    } catch (...) {
        consumer_error = std::current_exception();
        // Drain so a blocked producer can finish and the join below returns.
        try {
            while (source.next())
                ;
        } catch (...) {
        }
    }
    producer.join();

    // The execution core's failure is the root cause; the timing core only
    // ever sees its consequences (e.g. a truncated stream).
    if (producer_error)
        std::rethrow_exception(producer_error);
    if (consumer_error)
        std::rethrow_exception(consumer_error);

    RunArtifacts art;
    art.stats = stats::finalize(result);
    art.console = state.console;
    art.trace_records = state.instret;
    return art;
}

RunArtifacts replay_trace(const SimConfig& cfg, const std::string& trace_path) {
    validate_config(cfg);
    std::ifstream in(trace_path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Trace,
                    "cannot read trace file '" + trace_path + "'");

    image::RegionMap rmap(cfg);
    image::PageTableSet tables = image::build_page_tables(rmap, cfg);

    std::optional<std::ofstream> retire_log;
    timing::TimingOptions opts;
    if (!cfg.retire_log.empty()) {
        retire_log.emplace(cfg.retire_log, std::ios::binary);
        if (!*retire_log)
            throw Error(ErrorKind::Config,
                        "cannot open retire log '" + cfg.retire_log + "'");
        opts.retire_log = &*retire_log;
    }

    trace::FileSource source(in);
    timing::TimingResult result = timing::simulate(source, cfg, tables, rmap, opts);

    RunArtifacts art;
    art.stats = stats::finalize(result);
    art.trace_records = result.instret;
    return art;
}

CompareArtifacts run_compare(const SimConfig& cfg) {
    SimConfig n_cfg = cfg;
    n_cfg.virtualized = false;
    SimConfig v_cfg = cfg;
    v_cfg.virtualized = true;
    if (!cfg.trace_out.empty()) {
        n_cfg.trace_out = with_tag(cfg.trace_out, "-nonvirt");
        v_cfg.trace_out = with_tag(cfg.trace_out, "-virt");
    }
    if (!cfg.retire_log.empty()) {
        n_cfg.retire_log = with_tag(cfg.retire_log, "-nonvirt");
        v_cfg.retire_log = with_tag(cfg.retire_log, "-virt");
    }

    CompareArtifacts art;
    art.nonvirt = run_experiment(n_cfg);
    art.virt = run_experiment(v_cfg);
    art.report = stats::compare(art.nonvirt.stats, art.virt.stats);
    return art;
}

void write_stats_file(const stats::Stats& s, const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    stats::Format fmt = stats::Format::Table;
    if (ext == ".json")
        fmt = stats::Format::Json;
    else if (ext == ".csv")
        fmt = stats::Format::Csv;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Config, "cannot open stats output '" + path + "'");
    out << stats::render(s, fmt);
}

} // namespace hvsim::runner
