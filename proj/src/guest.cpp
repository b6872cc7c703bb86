#include "hvsim/guest.hpp"

#include <algorithm>
#include <sstream>

#include "hvsim/asm_kit.hpp"
#include "hvsim/error.hpp"

namespace hvsim::guest {

namespace {

// ---------------------------------------------------------------------------
// Native oracles: the console text is computed by ordinary C++ so the guest
// programs are checked against an implementation they share nothing with.

std::string search_expected(const FixtureInputs& in) {
    auto it = std::find(in.values.begin(), in.values.end(), in.key);
    long idx = (it == in.values.end()) ? -1 : long(it - in.values.begin());
    return "index=" + std::to_string(idx) + "\n";
}

std::string sort_expected(const FixtureInputs& in) {
    std::vector<uint32_t> v = in.values;
    std::sort(v.begin(), v.end());
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ' ';
        out += std::to_string(v[i]);
    }
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Shared assembly fragments

// Prints one character through the write call (a7=64, a0=buffer, a1=count).
// The caller passes the character in t3; t4, a0, a1 and a7 are clobbered,
// everything else survives (the handlers save what they use).
std::string putchar_routine(uint32_t buf_va) {
    std::ostringstream s;
    s << "putchar:\n"
      << "    li    t4, " << buf_va << "        # one-byte staging buffer\n"
      << "    sb    t3, 0(t4)\n"
      << "    mv    a0, t4\n"
      << "    li    a1, 1\n"
      << "    li    a7, 64             # write\n"
      << "    ecall\n"
      << "    jalr  x0, 0(ra)          # return\n";
    return s.str();
}

// Exit call: terminates the simulation without trapping.
std::string exit_fragment() {
    return "    li    a0, 0\n"
           "    li    a7, 93             # exit\n"
           "    ecall\n";
}

// The guest OS handler (VS mode). A system call from the user lands here;
// the handler saves the registers it uses, validates the call and forwards
// it to the hypervisor as a hypercall. The vector word only jumps to the
// body, which sits on its own page: every region base aliases to the same
// direct-mapped cache and TLB sets (the bases are all multiples of the
// cache span), so a handler body at the vector itself would evict the
// user's hot lines on every trap.
std::string os_handler_source(uint32_t base) {
    std::ostringstream s;
    s << "# Guest OS trap handler. Entered from user mode via ecall\n"
      << "# (vscause = 8) with the system-call number in a7. The vector\n"
      << "# jumps to a body on its own page to keep the handler out of the\n"
      << "# user program's cache and TLB sets.\n"
      << "os_vec:\n"
      << "    j     os_trap\n"
      << ".org " << (base + 0x1000) << "\n"
      << "os_trap:\n"
      << "    sw    t0, -4(tp)         # context save on the OS kernel stack\n"
      << "    sw    t1, -8(tp)\n"
      << "    csrrs t0, vscause, x0\n"
      << "    addi  t0, t0, -8\n"
      << "    bne   t0, x0, os_hang    # only user system calls expected\n"
      << "    csrrs t0, vsstatus, x0   # caller must be virtual user mode,\n"
      << "    andi  t0, t0, 7\n"
      << "    addi  t0, t0, -4         # which encodes as (v=1, prv=00)\n"
      << "    bne   t0, x0, os_hang\n"
      << "    li    t1, 94             # system-call numbers run 0..93\n"
      << "    bgeu  a7, t1, os_hang\n"
      << "    addi  t0, a7, -64\n"
      << "    beq   t0, x0, os_write\n"
      << "    addi  t0, a7, -93\n"
      << "    beq   t0, x0, os_forward # exit: nothing to validate\n"
      << "    j     os_hang            # no other service is implemented\n"
      << "os_write:\n"
      << "    beq   a0, x0, os_hang    # null buffer\n"
      << "    li    t1, 256\n"
      << "    bgeu  a1, t1, os_hang    # oversized write\n"
      << "    add   t0, a0, a1         # end of the buffer\n"
      << "    bltu  t0, a0, os_hang    # wrapped past the top of memory\n"
      << "    li    t1, 0x40000000     # limit of the user quarter\n"
      << "    bgeu  a0, t1, os_hang    # buffer must be user memory\n"
      << "    bgeu  t0, t1, os_hang    # ...end included\n"
      << "os_forward:\n"
      << "    ecall                    # forward to the hypervisor\n"
      << "    lw    t1, -8(tp)         # context restore\n"
      << "    lw    t0, -4(tp)\n"
      << "    sret                     # resume the user program\n"
      << "os_hang:\n"
      << "    j     os_hang\n";
    return s.str();
}

// The hypervisor handler (HS mode). Services the write call for traps from
// either user mode (cause 8, non-virtualized) or the guest OS (cause 10,
// hypercall). The HS stack top sits in gp by boot convention. As with the
// OS handler, the vector word jumps to a body on its own page — a distinct
// one from the OS body so the two handlers do not evict each other.
std::string hv_handler_source(uint32_t console_addr, uint32_t base) {
    std::ostringstream s;
    s << "# Hypervisor trap handler. Services write(a0=buffer, a1=count)\n"
      << "# for direct system calls (scause = 8) and hypercalls from the\n"
      << "# guest OS (scause = 10); returns the byte count in a0. The\n"
      << "# vector jumps to a body on its own page, clear of the user\n"
      << "# program's and the guest OS's cache and TLB sets.\n"
      << "hv_vec:\n"
      << "    j     hv_trap\n"
      << ".org " << (base + 0x2000) << "\n"
      << "hv_trap:\n"
      << "    sw    ra, -4(gp)         # full trap frame on the hypervisor\n"
      << "    sw    t0, -8(gp)         # stack; a0 is not saved because the\n"
      << "    sw    t1, -12(gp)        # service result returns in it\n"
      << "    sw    t2, -16(gp)\n"
      << "    sw    t3, -20(gp)\n"
      << "    sw    t4, -24(gp)\n"
      << "    sw    t5, -28(gp)\n"
      << "    sw    t6, -32(gp)\n"
      << "    sw    a1, -36(gp)\n"
      << "    sw    a2, -40(gp)\n"
      << "    sw    a3, -44(gp)\n"
      << "    sw    a4, -48(gp)\n"
      << "    sw    a5, -52(gp)\n"
      << "    sw    a6, -56(gp)\n"
      << "    sw    a7, -60(gp)\n"
      << "    csrrs t0, scause, x0     # 8 = system call, 10 = hypercall\n"
      << "    addi  t0, t0, -8\n"
      << "    andi  t0, t0, -3         # accept cause 8 or 10 only\n"
      << "    bne   t0, x0, hv_hang\n"
      << "    li    t1, 64\n"
      << "    bne   a7, t1, hv_hang    # only the write service exists\n"
      << "    li    t1, " << console_addr << "   # console doorbell\n"
      << "    mv    t2, a0             # cursor\n"
      << "    add   t3, a0, a1         # end\n"
      << "hv_copy:\n"
      << "    beq   t2, t3, hv_done\n"
      << "    lbu   t0, 0(t2)\n"
      << "    sb    t0, 0(t1)          # each store emits one console byte\n"
      << "    addi  t2, t2, 1\n"
      << "    j     hv_copy\n"
      << "hv_done:\n"
      << "    mv    a0, a1             # return value: bytes written\n"
      << "    lw    a7, -60(gp)\n"
      << "    lw    a6, -56(gp)\n"
      << "    lw    a5, -52(gp)\n"
      << "    lw    a4, -48(gp)\n"
      << "    lw    a3, -44(gp)\n"
      << "    lw    a2, -40(gp)\n"
      << "    lw    a1, -36(gp)\n"
      << "    lw    t6, -32(gp)\n"
      << "    lw    t5, -28(gp)\n"
      << "    lw    t4, -24(gp)\n"
      << "    lw    t3, -20(gp)\n"
      << "    lw    t2, -16(gp)\n"
      << "    lw    t1, -12(gp)\n"
      << "    lw    t0, -8(gp)\n"
      << "    lw    ra, -4(gp)\n"
      << "    sret\n"
      << "hv_hang:\n"
      << "    j     hv_hang\n";
    return s.str();
}

// ---------------------------------------------------------------------------
// User programs. Both print one character per write call; registers gp and
// tp are reserved for the handler stacks and never used here.

std::string search_user_source(uint32_t arr_va, uint32_t n, uint32_t buf_va) {
    std::ostringstream s;
    s << "# Linear search: scans " << n << " words for the key stored after\n"
      << "# the array, then prints \"index=<i>\" (or -1) and a newline.\n"
      << "main:\n"
      << "    li    s0, " << arr_va << "        # array base\n"
      << "    li    s1, " << n << "             # element count\n"
      << "    lw    s2, " << 4 * n << "(s0)     # search key\n"
      << "    li    t0, 0                       # index\n"
      << "search_loop:\n"
      << "    beq   t0, s1, not_found\n"
      << "    slli  t1, t0, 2\n"
      << "    add   t1, t1, s0\n"
      << "    lw    t2, 0(t1)\n"
      << "    beq   t2, s2, found\n"
      << "    addi  t0, t0, 1\n"
      << "    j     search_loop\n"
      << "found:\n"
      << "    mv    s3, t0\n"
      << "    j     print\n"
      << "not_found:\n"
      << "    li    s3, -1\n"
      << "print:\n"
      << "    li    t3, 105            # 'i'\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 110            # 'n'\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 100            # 'd'\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 101            # 'e'\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 120            # 'x'\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 61             # '='\n"
      << "    jal   ra, putchar\n"
      << "    bge   s3, x0, positive\n"
      << "    li    t3, 45             # '-'\n"
      << "    jal   ra, putchar\n"
      << "    sub   s3, x0, s3\n"
      << "positive:\n"
      << "    li    s4, 10\n"
      << "    blt   s3, s4, ones\n"
      << "    li    s5, 0              # tens digit\n"
      << "tens_loop:\n"
      << "    blt   s3, s4, tens_done\n"
      << "    sub   s3, s3, s4\n"
      << "    addi  s5, s5, 1\n"
      << "    j     tens_loop\n"
      << "tens_done:\n"
      << "    addi  t3, s5, 48\n"
      << "    jal   ra, putchar\n"
      << "ones:\n"
      << "    addi  t3, s3, 48\n"
      << "    jal   ra, putchar\n"
      << "    li    t3, 10             # newline\n"
      << "    jal   ra, putchar\n"
      << exit_fragment() << putchar_routine(buf_va);
    return s.str();
}

std::string sort_user_source(uint32_t arr_va, uint32_t n, uint32_t buf_va) {
    std::ostringstream s;
    s << "# Bubble sort: orders " << n << " words in place, then prints them\n"
      << "# space-separated with a trailing newline.\n"
      << "main:\n"
      << "    li    s0, " << arr_va << "        # array base\n"
      << "    li    s1, " << n << "             # element count\n"
      << "    addi  s2, s1, -1         # unsorted suffix length\n"
      << "outer:\n"
      << "    beq   s2, x0, print_all\n"
      << "    li    t0, 0              # j\n"
      << "inner:\n"
      << "    bge   t0, s2, inner_done\n"
      << "    slli  t1, t0, 2\n"
      << "    add   t1, t1, s0\n"
      << "    lw    t2, 0(t1)\n"
      << "    lw    t3, 4(t1)\n"
      << "    bge   t3, t2, no_swap\n"
      << "    sw    t3, 0(t1)\n"
      << "    sw    t2, 4(t1)\n"
      << "no_swap:\n"
      << "    addi  t0, t0, 1\n"
      << "    j     inner\n"
      << "inner_done:\n"
      << "    addi  s2, s2, -1\n"
      << "    j     outer\n"
      << "print_all:\n"
      << "    li    s2, 0              # i\n"
      << "print_loop:\n"
      << "    beq   s2, s1, end_line\n"
      << "    slli  t0, s2, 2\n"
      << "    add   t0, t0, s0\n"
      << "    lw    s3, 0(t0)          # value, 0..99\n"
      << "    li    s4, 10\n"
      << "    blt   s3, s4, p_ones\n"
      << "    li    s5, 0              # tens digit\n"
      << "p_tens:\n"
      << "    blt   s3, s4, p_tens_done\n"
      << "    sub   s3, s3, s4\n"
      << "    addi  s5, s5, 1\n"
      << "    j     p_tens\n"
      << "p_tens_done:\n"
      << "    addi  t3, s5, 48\n"
      << "    jal   ra, putchar\n"
      << "p_ones:\n"
      << "    addi  t3, s3, 48\n"
      << "    jal   ra, putchar\n"
      << "    addi  t0, s2, 1\n"
      << "    beq   t0, s1, next_elem  # no separator after the last one\n"
      << "    li    t3, 32             # ' '\n"
      << "    jal   ra, putchar\n"
      << "next_elem:\n"
      << "    addi  s2, s2, 1\n"
      << "    j     print_loop\n"
      << "end_line:\n"
      << "    li    t3, 10             # newline\n"
      << "    jal   ra, putchar\n"
      << exit_fragment() << putchar_routine(buf_va);
    return s.str();
}

void check_inputs(const std::string& name, const FixtureInputs& in) {
    if (in.values.empty() || in.values.size() > 32)
        throw Error(ErrorKind::Config,
                    "fixture '" + name + "' needs 1..32 values");
    for (uint32_t v : in.values)
        if (v > 99)
            throw Error(ErrorKind::Config,
                        "fixture '" + name + "' values must be 0..99");
    if (name == "search" && in.key > 99)
        throw Error(ErrorKind::Config, "search key must be 0..99");
}

} // namespace

FixtureInputs FixtureInputs::search_default() {
    FixtureInputs in;
    in.values = {3, 7, 11, 19, 2,  45, 8,  61,
                 90, 33, 5,  17, 72, 26, 54, 38};
    in.key = 72; // found at index 12
    return in;
}

FixtureInputs FixtureInputs::sort_default() {
    FixtureInputs in;
    in.values = {38, 7,  90, 3,  61, 22, 45, 9,
                 84, 15, 2,  77, 50, 31, 68, 12};
    return in;
}

bool is_fixture_name(const std::string& name) {
    return name == "search" || name == "sort";
}

std::string default_os_handler(const SimConfig& cfg) {
    return os_handler_source(cfg.vstvec_reset);
}

std::string default_hv_handler(const SimConfig& cfg) {
    return hv_handler_source(cfg.console_addr, cfg.stvec_reset);
}

std::vector<std::string> fixture_names() { return {"search", "sort"}; }

Fixture make_fixture(const std::string& name, const FixtureInputs& inputs,
                     const SimConfig& cfg) {
    if (!is_fixture_name(name))
        throw Error(ErrorKind::Config, "unknown fixture '" + name + "'");
    check_inputs(name, inputs);

    const RegionLayout& user = cfg.region(Region::User);
    uint32_t arr = user.virt.lo + cfg.code_area_bytes; // data area base
    uint32_t buf = arr + 0x100;                        // print buffer
    uint32_t n = uint32_t(inputs.values.size());

    Fixture fx;
    fx.name = name;
    fx.data_base = arr;
    fx.data_words = inputs.values;
    fx.os_source = os_handler_source(cfg.vstvec_reset);
    fx.hv_source = hv_handler_source(cfg.console_addr, cfg.stvec_reset);
    if (name == "search") {
        fx.data_words.push_back(inputs.key); // key lives just after the array
        fx.user_source = search_user_source(arr, n, buf);
        fx.expected_console = search_expected(inputs);
    } else {
        fx.user_source = sort_user_source(arr, n, buf);
        fx.expected_console = sort_expected(inputs);
    }
    return fx;
}

Fixture make_fixture(const std::string& name, const SimConfig& cfg) {
    if (name == "search")
        return make_fixture(name, FixtureInputs::search_default(), cfg);
    if (name == "sort")
        return make_fixture(name, FixtureInputs::sort_default(), cfg);
    throw Error(ErrorKind::Config, "unknown fixture '" + name + "'");
}

functional::MachineState build_fixture(const Fixture& fixture,
                                       const SimConfig& cfg) {
    std::vector<image::Placement> placements;

    asm_kit::CodeBlob user =
        asm_kit::assemble(fixture.user_source, cfg.user_entry);
    placements.push_back({user, Region::User, image::AreaKind::Code});

    asm_kit::CodeBlob hv =
        asm_kit::assemble(fixture.hv_source, cfg.stvec_reset);
    placements.push_back({hv, Region::HypSup, image::AreaKind::Code});

    if (cfg.virtualized) {
        asm_kit::CodeBlob os =
            asm_kit::assemble(fixture.os_source, cfg.vstvec_reset);
        placements.push_back({os, Region::VirtSup, image::AreaKind::Code});
    }

    if (!fixture.data_words.empty()) {
        asm_kit::CodeBlob data;
        data.base = fixture.data_base;
        data.words = fixture.data_words;
        placements.push_back({data, Region::User, image::AreaKind::Data});
    }

    image::RegionMap rmap(cfg);
    image::PageTableSet tables = image::build_page_tables(rmap, cfg);
    image::MemoryImage img = image::compose_image(placements, tables, rmap, cfg);
    return functional::make_entry_state(img, cfg);
}

std::vector<OverheadExpectation> expected_properties() {
    std::vector<OverheadExpectation> props;
    props.push_back({"instret_v_gt_n",
                     [](const stats::Stats& n, const stats::Stats& v) {
                         return v.instret > n.instret;
                     }});
    props.push_back({"cycles_v_gt_n",
                     [](const stats::Stats& n, const stats::Stats& v) {
                         return v.cycles > n.cycles;
                     }});
    props.push_back({"cpi_v_lt_n",
                     [](const stats::Stats& n, const stats::Stats& v) {
                         return v.cpi < n.cpi;
                     }});
    return props;
}

} // namespace hvsim::guest
