#include "hvsim/functional.hpp"

#include <cstdio>

#include "hvsim/error.hpp"

namespace hvsim::functional {

namespace {

[[noreturn]] void program_fail(const char* pattern, uint32_t a, uint32_t b) {
    char msg[128];
    std::snprintf(msg, sizeof msg, pattern, a, b);
    throw Error(ErrorKind::Program, msg);
}

// Previous-mode encoding kept in the low bits of the status registers.
constexpr uint32_t kStatusModeMask = 0x7;

uint8_t encode_mode(Mode m) {
    return uint8_t(mode_v(m) << 2 | mode_prv(m));
}

Mode decode_mode(uint32_t status_bits) {
    return mode_from_bits(uint8_t(status_bits >> 2 & 1),
                          uint8_t(status_bits & 3));
}

} // namespace

uint32_t CsrFile::read(uint16_t addr) const {
    switch (addr) {
    case kCsrSstatus: return sstatus;
    case kCsrStvec: return stvec;
    case kCsrSepc: return sepc;
    case kCsrScause: return scause;
    case kCsrVsstatus: return vsstatus;
    case kCsrVstvec: return vstvec;
    case kCsrVsepc: return vsepc;
    case kCsrVscause: return vscause;
    case kCsrMstatus: return mstatus;
    case kCsrMedeleg: return medeleg;
    case kCsrMtvec: return mtvec;
    case kCsrMepc: return mepc;
    case kCsrMcause: return mcause;
    }
    program_fail("unimplemented CSR 0x%03x", addr, 0);
}

void CsrFile::write(uint16_t addr, uint32_t value) {
    switch (addr) {
    // The status registers carry nothing but the previous-mode field.
    case kCsrSstatus: sstatus = value & kStatusModeMask; return;
    case kCsrStvec: stvec = value; return;
    case kCsrSepc: sepc = value; return;
    case kCsrScause: scause = value; return;
    case kCsrVsstatus: vsstatus = value & kStatusModeMask; return;
    case kCsrVstvec: vstvec = value; return;
    case kCsrVsepc: vsepc = value; return;
    case kCsrVscause: vscause = value; return;
    case kCsrMstatus: mstatus = value & kStatusModeMask; return;
    case kCsrMedeleg: medeleg = value; return; // held but never consulted
    case kCsrMtvec: mtvec = value; return;
    case kCsrMepc: mepc = value; return;
    case kCsrMcause: mcause = value; return;
    }
    program_fail("unimplemented CSR 0x%03x", addr, 0);
}

int mode_level(Mode m) {
    switch (m) {
    case Mode::User:
    case Mode::VirtUser: return 0;
    case Mode::VirtSup: return 1;
    case Mode::HypSup: return 2;
    case Mode::Machine: return 3;
    }
    return 0;
}

int csr_level(uint16_t addr) {
    switch (addr >> 8) {
    case 0x1: return 2; // sstatus group: hypervisor-supervisor
    case 0x2: return 1; // vsstatus group: guest supervisor
    default: return 3;  // machine
    }
}

MachineState make_entry_state(image::MemoryImage image, const SimConfig& cfg) {
    MachineState s;
    s.mem = std::move(image);
    s.cfg = cfg;
    s.mode = cfg.virtualized ? Mode::VirtUser : Mode::User;
    s.pc = cfg.user_entry;
    s.csr.vstvec = cfg.vstvec_reset;
    s.csr.stvec = cfg.stvec_reset;
    s.csr.mtvec = cfg.mtvec_reset;

    // Stack conventions: sp gets the user stack, and the kernel stack tops
    // for the HS and VS layers ride in gp and tp (the guest programs leave
    // both registers alone). The VS frame sits one page below the HS frame:
    // all region stack tops alias to the same direct-mapped TLB set, and
    // the two kernel frames are the only ones active in the same trap.
    auto stack_top = [&](Region r) {
        return cfg.region(r).virt.lo + cfg.code_area_bytes +
               cfg.data_area_bytes;
    };
    s.x[2] = stack_top(Region::User);                      // sp
    s.x[3] = stack_top(Region::HypSup);                    // gp
    s.x[4] = stack_top(Region::VirtSup) - cfg.page_size(); // tp
    return s;
}

namespace {

// The execution window of one region: the pages its table maps, which is
// the code area followed by the data area.
bool in_window(const SimConfig& cfg, uint32_t va, uint32_t bytes) {
    for (const RegionLayout& lay : cfg.regions) {
        if (!lay.virt.contains(va)) continue;
        uint64_t off = va - lay.virt.lo;
        return off + bytes <=
               uint64_t(cfg.code_area_bytes) + cfg.data_area_bytes;
    }
    return false;
}

uint32_t load_value(MachineState& s, Op op, uint32_t addr) {
    switch (op) {
    case Op::LB: return uint32_t(int32_t(int8_t(s.mem.read8(addr))));
    case Op::LBU: return s.mem.read8(addr);
    case Op::LH: return uint32_t(int32_t(int16_t(s.mem.read16(addr))));
    case Op::LHU: return s.mem.read16(addr);
    default: return s.mem.read32(addr);
    }
}

uint32_t alu_result(Op op, uint32_t a, uint32_t b) {
    switch (op) {
    case Op::ADD: case Op::ADDI: return a + b;
    case Op::SUB: return a - b;
    case Op::SLT: case Op::SLTI: return int32_t(a) < int32_t(b) ? 1 : 0;
    case Op::SLTU: case Op::SLTIU: return a < b ? 1 : 0;
    case Op::XOR: case Op::XORI: return a ^ b;
    case Op::OR: case Op::ORI: return a | b;
    case Op::AND: case Op::ANDI: return a & b;
    case Op::SLL: case Op::SLLI: return a << (b & 31);
    case Op::SRL: case Op::SRLI: return a >> (b & 31);
    case Op::SRA: case Op::SRAI: return uint32_t(int32_t(a) >> (b & 31));
    default: return 0;
    }
}

bool branch_taken(Op op, uint32_t a, uint32_t b) {
    switch (op) {
    case Op::BEQ: return a == b;
    case Op::BNE: return a != b;
    case Op::BLT: return int32_t(a) < int32_t(b);
    case Op::BGE: return int32_t(a) >= int32_t(b);
    case Op::BLTU: return a < b;
    case Op::BGEU: return a >= b;
    default: return false;
    }
}

} // namespace

uint32_t csr_op(MachineState& s, Op op, uint16_t addr, uint8_t rs1_or_uimm) {
    if (mode_level(s.mode) < csr_level(addr))
        program_fail("CSR 0x%03x is not accessible from the current mode",
                     addr, 0);
    uint32_t old = s.csr.read(addr);
    bool immediate = op == Op::CSRRWI || op == Op::CSRRSI || op == Op::CSRRCI;
    uint32_t src = immediate ? rs1_or_uimm : s.reg(rs1_or_uimm);
    switch (op) {
    case Op::CSRRW:
    case Op::CSRRWI:
        s.csr.write(addr, src);
        break;
    case Op::CSRRS:
    case Op::CSRRSI:
        if (rs1_or_uimm != 0) s.csr.write(addr, old | src);
        break;
    case Op::CSRRC:
    case Op::CSRRCI:
        if (rs1_or_uimm != 0) s.csr.write(addr, old & ~src);
        break;
    default:
        program_fail("not a CSR operation", 0, 0);
    }
    return old;
}

void take_ecall_trap(MachineState& s) {
    uint8_t prev = encode_mode(s.mode);
    switch (s.mode) {
    case Mode::VirtUser:
        s.csr.vscause = kCauseEcallFromU;
        s.csr.vsepc = s.pc;
        s.csr.vsstatus = prev;
        s.pc = s.csr.vstvec;
        s.mode = Mode::VirtSup;
        return;
    case Mode::VirtSup:
        s.csr.scause = kCauseEcallFromVS;
        s.csr.sepc = s.pc;
        s.csr.sstatus = prev;
        s.pc = s.csr.stvec;
        s.mode = Mode::HypSup;
        return;
    case Mode::User:
        s.csr.scause = kCauseEcallFromU;
        s.csr.sepc = s.pc;
        s.csr.sstatus = prev;
        s.pc = s.csr.stvec;
        s.mode = Mode::HypSup;
        return;
    case Mode::HypSup:
        s.csr.mcause = kCauseEcallFromHS;
        s.csr.mepc = s.pc;
        s.csr.mstatus = prev;
        s.pc = s.csr.mtvec;
        s.mode = Mode::Machine;
        return;
    case Mode::Machine:
        program_fail("ecall from machine mode at pc %08x", s.pc, 0);
    }
}

void trap_return(MachineState& s, Op op) {
    if (op == Op::SRET) {
        if (s.mode == Mode::VirtSup) {
            // The guest supervisor always resumes its user program.
            s.mode = Mode::VirtUser;
            s.pc = s.csr.vsepc + 4;
            return;
        }
        if (s.mode == Mode::HypSup) {
            Mode prev = decode_mode(s.csr.sstatus);
            if (mode_level(prev) >= mode_level(Mode::HypSup))
                program_fail("sret to a mode that does not trap here (pc "
                             "%08x)", s.pc, 0);
            s.mode = prev;
            s.pc = s.csr.sepc + 4;
            return;
        }
        program_fail("sret requires supervisor privilege (pc %08x)", s.pc, 0);
    }
    if (s.mode != Mode::Machine)
        program_fail("mret outside machine mode (pc %08x)", s.pc, 0);
    Mode prev = decode_mode(s.csr.mstatus);
    if (prev == Mode::Machine)
        program_fail("mret to machine mode (pc %08x)", s.pc, 0);
    s.mode = prev;
    s.pc = s.csr.mepc + 4;
}

bool console_store(MachineState& s, uint32_t addr, uint32_t value) {
    if (addr != s.cfg.console_addr) return false;
    s.console.push_back(char(value & 0xFF));
    return true;
}

trace::TraceRecord step(MachineState& s) {
    if (s.halted)
        throw Error(ErrorKind::Program, "step on a halted machine");

    uint32_t pc = s.pc;
    if (pc % 4 != 0) program_fail("misaligned fetch at %08x", pc, 0);
    if (!in_window(s.cfg, pc, 4))
        program_fail("fetch outside mapped memory at %08x", pc, 0);

    uint32_t word = s.mem.read32(pc);
    DecodedInstr d = decode(word);

    trace::TraceRecord r;
    r.instr_no = s.instret;
    r.pc = pc;
    r.rs1 = d.rs1;
    r.rs2 = d.rs2;
    r.rd = d.rd;
    r.v = mode_v(s.mode);
    r.prv = mode_prv(s.mode);

    uint32_t next = pc + 4;
    bool pc_overridden = false;

    switch (d.op) {
    case Op::LUI:
        s.set_reg(d.rd, uint32_t(d.imm));
        break;
    case Op::AUIPC:
        s.set_reg(d.rd, pc + uint32_t(d.imm));
        break;
    case Op::ADDI: case Op::SLTI: case Op::SLTIU: case Op::XORI:
    case Op::ORI: case Op::ANDI: case Op::SLLI: case Op::SRLI:
    case Op::SRAI:
        s.set_reg(d.rd, alu_result(d.op, s.reg(d.rs1), uint32_t(d.imm)));
        break;
    case Op::ADD: case Op::SUB: case Op::SLL: case Op::SLT: case Op::SLTU:
    case Op::XOR: case Op::SRL: case Op::SRA: case Op::OR: case Op::AND:
        s.set_reg(d.rd, alu_result(d.op, s.reg(d.rs1), s.reg(d.rs2)));
        break;
    case Op::JAL: {
        uint32_t target = pc + uint32_t(d.imm);
        if (target % 4 != 0) program_fail("misaligned jump to %08x", target, 0);
        s.set_reg(d.rd, pc + 4);
        next = target;
        r.taken_or_jump = true;
        break;
    }
    case Op::JALR: {
        uint32_t target = (s.reg(d.rs1) + uint32_t(d.imm)) & ~1u;
        if (target % 4 != 0) program_fail("misaligned jump to %08x", target, 0);
        s.set_reg(d.rd, pc + 4);
        next = target;
        r.taken_or_jump = true;
        break;
    }
    case Op::BEQ: case Op::BNE: case Op::BLT: case Op::BGE:
    case Op::BLTU: case Op::BGEU: {
        r.cond_branch = true;
        if (branch_taken(d.op, s.reg(d.rs1), s.reg(d.rs2))) {
            uint32_t target = pc + uint32_t(d.imm);
            if (target % 4 != 0)
                program_fail("misaligned branch to %08x", target, 0);
            next = target;
            r.taken_or_jump = true;
        }
        break;
    }
    case Op::LB: case Op::LH: case Op::LW: case Op::LBU: case Op::LHU: {
        uint32_t addr = s.reg(d.rs1) + uint32_t(d.imm);
        uint32_t bytes = d.op == Op::LW ? 4 : (d.op == Op::LB || d.op == Op::LBU) ? 1 : 2;
        if (addr % bytes != 0)
            program_fail("misaligned load of %u bytes at %08x", bytes, addr);
        if (!in_window(s.cfg, addr, bytes))
            program_fail("load outside mapped memory at %08x", addr, 0);
        s.set_reg(d.rd, load_value(s, d.op, addr));
        r.load = true;
        r.dva = addr;
        break;
    }
    case Op::SB: case Op::SH: case Op::SW: {
        uint32_t addr = s.reg(d.rs1) + uint32_t(d.imm);
        uint32_t bytes = d.op == Op::SW ? 4 : d.op == Op::SB ? 1 : 2;
        if (addr % bytes != 0)
            program_fail("misaligned store of %u bytes at %08x", bytes, addr);
        if (!in_window(s.cfg, addr, bytes))
            program_fail("store outside mapped memory at %08x", addr, 0);
        uint32_t value = s.reg(d.rs2);
        if (!console_store(s, addr, value)) {
            if (d.op == Op::SB) s.mem.write8(addr, uint8_t(value));
            else if (d.op == Op::SH) s.mem.write16(addr, uint16_t(value));
            else s.mem.write32(addr, value);
        }
        r.store = true;
        r.dva = addr;
        break;
    }
    case Op::FENCE:
        break; // single hart: nothing to order
    case Op::CSRRW: case Op::CSRRS: case Op::CSRRC:
        s.set_reg(d.rd, csr_op(s, d.op, d.csr, d.rs1));
        break;
    case Op::CSRRWI: case Op::CSRRSI: case Op::CSRRCI:
        s.set_reg(d.rd, csr_op(s, d.op, d.csr, uint8_t(d.imm)));
        break;
    case Op::ECALL:
        if (s.reg(17) == 93) { // exit call: halt at the call site
            r.exit_call = true;
            s.halted = true;
            pc_overridden = true;
        } else {
            take_ecall_trap(s);
            pc_overridden = true;
        }
        break;
    case Op::SRET:
    case Op::MRET:
        trap_return(s, d.op);
        pc_overridden = true;
        break;
    case Op::EBREAK:
        program_fail("ebreak at %08x", pc, 0);
    case Op::ILLEGAL:
        program_fail("illegal instruction %08x at %08x", word, pc);
    }

    if (!pc_overridden) s.pc = next;
    ++s.instret;
    return r;
}

void run(MachineState& s, uint64_t max_instructions, const TraceSink& sink) {
    while (!s.halted) {
        if (s.instret >= max_instructions)
            throw Error(ErrorKind::LimitExhausted,
                        "instruction budget exhausted after " +
                            std::to_string(s.instret) + " instructions");
        trace::TraceRecord r = step(s);
        sink(r);
        if (r.exit_call) break;
    }
}

std::vector<trace::TraceRecord> run_collect(MachineState& s,
                                            uint64_t max_instructions) {
    std::vector<trace::TraceRecord> out;
    run(s, max_instructions, [&](const trace::TraceRecord& r) {
        out.push_back(r);
    });
    return out;
}

} // namespace hvsim::functional
