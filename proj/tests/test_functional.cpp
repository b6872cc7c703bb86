#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "hvsim/config.hpp"
#include "hvsim/error.hpp"
#include "hvsim/functional.hpp"
#include "hvsim/rv32i.hpp"
#include "isa_cases.hpp"
#include "test_util.hpp"

using namespace hvsim;
using namespace hvsim::functional;

namespace {

void expect_program_fault(MachineState& s, uint64_t budget = 1000) {
    try {
        run_collect(s, budget);
        FAIL_CHECK("expected Error{Program}");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Program);
    }
}

MachineState blank_state() {
    SimConfig cfg;
    return tu::boot_asm("nop", cfg);
}

} // namespace

TEST_CASE("conformance battery: final state matches the hand-checked oracle") {
    SimConfig cfg;
    for (const auto& c : isa_cases::unprivileged()) {
        CAPTURE(c.name);
        MachineState s = tu::boot_asm(c.source, cfg, c.data, 0x00020000);
        auto records = run_collect(s, cfg.max_instructions);
        REQUIRE(s.halted);
        REQUIRE(!records.empty());
        CHECK(records.back().exit_call);
        CHECK(s.instret == records.size());
        for (const auto& [reg, value] : c.regs) {
            CAPTURE(int(reg));
            CHECK(s.reg(reg) == value);
        }
        for (const auto& [addr, value] : c.mem) {
            CAPTURE(addr);
            CHECK(s.mem.read32(addr) == value);
        }
    }
}

TEST_CASE("system battery: trap chains observed from inside the handlers") {
    for (const auto& c : isa_cases::system_cases()) {
        CAPTURE(c.name);
        SimConfig cfg;
        cfg.virtualized = c.virtualized;
        MachineState s =
            tu::boot_system(c.user, c.os, c.hv, c.machine, cfg);
        auto records = run_collect(s, cfg.max_instructions);
        REQUIRE(s.halted);
        CHECK(records.back().exit_call);
        for (const auto& [reg, value] : c.regs) {
            CAPTURE(int(reg));
            CHECK(s.reg(reg) == value);
        }
        CHECK(s.pc == c.final_pc);
        CHECK(s.mode == c.final_mode);
    }
}

TEST_CASE("entry state: pc, mode, stacks and vectors") {
    SimConfig cfg;
    MachineState s = tu::boot_asm("nop", cfg);
    CHECK(s.pc == cfg.user_entry);
    CHECK(s.mode == Mode::User);
    CHECK(s.instret == 0);
    CHECK(!s.halted);
    CHECK(s.reg(2) == 0x00060000);  // sp: top of the user stack
    CHECK(s.reg(3) == 0x80060000);  // gp: top of the HS kernel stack
    CHECK(s.reg(4) == 0x4005F000);  // tp: VS kernel stack, one page down
    CHECK(s.csr.vstvec == cfg.vstvec_reset);
    CHECK(s.csr.stvec == cfg.stvec_reset);
    CHECK(s.csr.mtvec == cfg.mtvec_reset);

    cfg.virtualized = true;
    MachineState vs = tu::boot_asm("nop", cfg);
    CHECK(vs.mode == Mode::VirtUser);
    CHECK(vs.pc == cfg.user_entry);
}

TEST_CASE("trace records carry pc, registers, mode bits and flags") {
    SimConfig cfg;
    MachineState s = tu::boot_asm(R"(
        li x5, 0x20000
        lw x6, 0(x5)
        sw x6, 4(x5)
        beq x6, x0, 8
        jal x1, 8
        nop
        li a7, 93
        ecall
    )",
                                  cfg);
    auto records = run_collect(s, cfg.max_instructions);
    REQUIRE(records.size() == 8);

    // instr_no increases strictly by one from zero.
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].instr_no == i);
        CHECK(records[i].pid == 0);
        CHECK(records[i].osid == 0);
        CHECK(records[i].v == 0);
        CHECK(records[i].prv == 0);
    }

    // li 0x20000 is two words (lui + addi), so the lw sits at 0x10008.
    CHECK(records[0].pc == 0x00010000); // lui
    CHECK(records[0].rd == 5);
    CHECK(records[0].dva == 0);
    CHECK(records[1].rd == 5); // the li's addi
    CHECK(records[1].rs1 == 5);

    CHECK(records[2].pc == 0x00010008); // lw
    CHECK(records[2].load);
    CHECK(!records[2].store);
    CHECK(records[2].dva == 0x00020000);
    CHECK(records[2].rs1 == 5);
    CHECK(records[2].rd == 6);

    CHECK(records[3].store); // sw
    CHECK(!records[3].load);
    CHECK(records[3].dva == 0x00020004);
    CHECK(records[3].rs1 == 5);
    CHECK(records[3].rs2 == 6);
    CHECK(records[3].rd == 0);

    CHECK(records[4].cond_branch); // beq, taken (x6 == 0)
    CHECK(records[4].taken_or_jump);
    CHECK(records[4].is_control());

    // The taken beq at 0x10010 skips the jal and lands on the nop.
    CHECK(records[5].pc == 0x00010018);
    CHECK(!records[5].cond_branch);

    CHECK(records.back().exit_call);
    CHECK(records.back().pc == s.pc);
}

TEST_CASE("jal and jalr records set taken_or_jump but not cond_branch") {
    SimConfig cfg;
    MachineState s = tu::boot_asm(R"(
        jal x1, 4
        jalr x1, 4(x1)
        li a7, 93
        ecall
    )",
                                  cfg);
    auto records = run_collect(s, cfg.max_instructions);
    REQUIRE(records.size() == 4);
    CHECK(records[0].taken_or_jump);
    CHECK(!records[0].cond_branch);
    CHECK(records[1].taken_or_jump);
    CHECK(!records[1].cond_branch);
    // A not-taken branch keeps taken_or_jump clear.
    MachineState s2 = tu::boot_asm(R"(
        li x5, 1
        beq x5, x0, 8
        li a7, 93
        ecall
    )",
                                   cfg);
    auto recs2 = run_collect(s2, cfg.max_instructions);
    CHECK(recs2[1].cond_branch);
    CHECK(!recs2[1].taken_or_jump);
}

TEST_CASE("csr file: raw access, masking, unimplemented addresses") {
    CsrFile csr;
    const uint16_t all[] = {kCsrSstatus, kCsrStvec,   kCsrSepc,   kCsrScause,
                            kCsrVsstatus, kCsrVstvec, kCsrVsepc,  kCsrVscause,
                            kCsrMstatus, kCsrMedeleg, kCsrMtvec,  kCsrMepc,
                            kCsrMcause};
    for (uint16_t addr : all) CHECK(csr.read(addr) == 0);

    // Status registers keep only the mode bits; everything else is 32 bits.
    csr.write(kCsrSstatus, 0xFFFFFFFF);
    CHECK(csr.read(kCsrSstatus) == 7);
    csr.write(kCsrVsstatus, 0xFFFFFFF4);
    CHECK(csr.read(kCsrVsstatus) == 4);
    csr.write(kCsrMstatus, 0x12345678);
    CHECK(csr.read(kCsrMstatus) == 0);
    csr.write(kCsrSepc, 0xDEADBEEC);
    CHECK(csr.read(kCsrSepc) == 0xDEADBEEC);
    csr.write(kCsrMedeleg, 0xFFFFFFFF);
    CHECK(csr.read(kCsrMedeleg) == 0xFFFFFFFF);

    CHECK_THROWS_AS((void)csr.read(0x7C0), Error);
    CHECK_THROWS_AS(csr.write(0x000, 1), Error);
}

TEST_CASE("csr privilege lattice") {
    CHECK(mode_level(Mode::User) == 0);
    CHECK(mode_level(Mode::VirtUser) == 0);
    CHECK(mode_level(Mode::VirtSup) == 1);
    CHECK(mode_level(Mode::HypSup) == 2);
    CHECK(mode_level(Mode::Machine) == 3);
    CHECK(csr_level(kCsrSstatus) == 2);
    CHECK(csr_level(kCsrVstvec) == 1);
    CHECK(csr_level(kCsrMcause) == 3);

    MachineState s = blank_state();

    // User and VirtUser may touch nothing.
    for (Mode m : {Mode::User, Mode::VirtUser}) {
        s.mode = m;
        CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrVsstatus, 0), Error);
        CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrSstatus, 0), Error);
        CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrMstatus, 0), Error);
    }
    // VS reaches the vs* file only.
    s.mode = Mode::VirtSup;
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrVscause, 0));
    CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrScause, 0), Error);
    CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrMcause, 0), Error);
    // HS reaches s* and vs* but not m*.
    s.mode = Mode::HypSup;
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrScause, 0));
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrVscause, 0));
    CHECK_THROWS_AS(csr_op(s, Op::CSRRS, kCsrMcause, 0), Error);
    // M reaches everything.
    s.mode = Mode::Machine;
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrScause, 0));
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrVscause, 0));
    CHECK_NOTHROW(csr_op(s, Op::CSRRS, kCsrMcause, 0));
}

TEST_CASE("csr_op: read-modify-write semantics") {
    MachineState s = blank_state();
    s.mode = Mode::Machine;

    s.csr.write(kCsrMtvec, 0xF0);
    s.set_reg(5, 0x0F);

    // CSRRW returns the old value and writes the source unconditionally.
    CHECK(csr_op(s, Op::CSRRW, kCsrMtvec, 5) == 0xF0);
    CHECK(s.csr.read(kCsrMtvec) == 0x0F);
    // CSRRW with rs1 = x0 still writes (zero).
    CHECK(csr_op(s, Op::CSRRW, kCsrMtvec, 0) == 0x0F);
    CHECK(s.csr.read(kCsrMtvec) == 0);

    // CSRRS sets bits; with x0 it reads without writing.
    s.csr.write(kCsrMtvec, 0xF0);
    CHECK(csr_op(s, Op::CSRRS, kCsrMtvec, 5) == 0xF0);
    CHECK(s.csr.read(kCsrMtvec) == 0xFF);
    CHECK(csr_op(s, Op::CSRRS, kCsrMtvec, 0) == 0xFF);
    CHECK(s.csr.read(kCsrMtvec) == 0xFF);

    // CSRRC clears bits; with x0 it reads without writing.
    CHECK(csr_op(s, Op::CSRRC, kCsrMtvec, 5) == 0xFF);
    CHECK(s.csr.read(kCsrMtvec) == 0xF0);
    CHECK(csr_op(s, Op::CSRRC, kCsrMtvec, 0) == 0xF0);
    CHECK(s.csr.read(kCsrMtvec) == 0xF0);

    // Immediate forms treat the operand as a 5-bit literal.
    CHECK(csr_op(s, Op::CSRRWI, kCsrMtvec, 21) == 0xF0);
    CHECK(s.csr.read(kCsrMtvec) == 21);
    CHECK(csr_op(s, Op::CSRRSI, kCsrMtvec, 8) == 21);
    CHECK(s.csr.read(kCsrMtvec) == 29);
    CHECK(csr_op(s, Op::CSRRCI, kCsrMtvec, 5) == 29);
    CHECK(s.csr.read(kCsrMtvec) == 24);
    // Zero immediate skips the write for the set/clear forms.
    CHECK(csr_op(s, Op::CSRRSI, kCsrMtvec, 0) == 24);
    CHECK(csr_op(s, Op::CSRRCI, kCsrMtvec, 0) == 24);
    CHECK(s.csr.read(kCsrMtvec) == 24);
}

TEST_CASE("ecall routing writes the right trap frame per mode") {
    SimConfig cfg;

    SUBCASE("VirtUser delegates to the guest OS") {
        MachineState s = blank_state();
        s.mode = Mode::VirtUser;
        s.pc = 0x00010004;
        take_ecall_trap(s);
        CHECK(s.mode == Mode::VirtSup);
        CHECK(s.pc == cfg.vstvec_reset);
        CHECK(s.csr.vscause == 8);
        CHECK(s.csr.vsepc == 0x00010004);
        CHECK(s.csr.vsstatus == 4); // (v=1, prv=00)
        CHECK(s.csr.scause == 0);   // HS frame untouched
    }
    SUBCASE("VirtSup hypercalls into HS") {
        MachineState s = blank_state();
        s.mode = Mode::VirtSup;
        s.pc = 0x4000000C;
        take_ecall_trap(s);
        CHECK(s.mode == Mode::HypSup);
        CHECK(s.pc == cfg.stvec_reset);
        CHECK(s.csr.scause == 10);
        CHECK(s.csr.sepc == 0x4000000C);
        CHECK(s.csr.sstatus == 5); // (v=1, prv=01)
    }
    SUBCASE("User lands in HS on a bare-metal system") {
        MachineState s = blank_state();
        s.mode = Mode::User;
        s.pc = 0x00010000;
        take_ecall_trap(s);
        CHECK(s.mode == Mode::HypSup);
        CHECK(s.pc == cfg.stvec_reset);
        CHECK(s.csr.scause == 8);
        CHECK(s.csr.sstatus == 0);
    }
    SUBCASE("HypSup escalates to Machine") {
        MachineState s = blank_state();
        s.mode = Mode::HypSup;
        s.pc = 0x80000008;
        take_ecall_trap(s);
        CHECK(s.mode == Mode::Machine);
        CHECK(s.pc == cfg.mtvec_reset);
        CHECK(s.csr.mcause == 9);
        CHECK(s.csr.mepc == 0x80000008);
        CHECK(s.csr.mstatus == 1); // (v=0, prv=01)
    }
    SUBCASE("Machine has nowhere to go") {
        MachineState s = blank_state();
        s.mode = Mode::Machine;
        CHECK_THROWS_AS(take_ecall_trap(s), Error);
    }
}

TEST_CASE("trap returns restore the recorded mode at epc + 4") {
    SUBCASE("sret from VS always returns to VU") {
        MachineState s = blank_state();
        s.mode = Mode::VirtSup;
        s.csr.vsepc = 0x00010004;
        s.csr.vsstatus = 4;
        trap_return(s, Op::SRET);
        CHECK(s.mode == Mode::VirtUser);
        CHECK(s.pc == 0x00010008);
    }
    SUBCASE("sret from HS follows sstatus") {
        struct Row {
            uint32_t sstatus;
            Mode mode;
        };
        for (Row row : {Row{0, Mode::User}, Row{4, Mode::VirtUser},
                        Row{5, Mode::VirtSup}}) {
            MachineState s = blank_state();
            s.mode = Mode::HypSup;
            s.csr.sepc = 0x40000010;
            s.csr.sstatus = row.sstatus;
            trap_return(s, Op::SRET);
            CHECK(s.mode == row.mode);
            CHECK(s.pc == 0x40000014);
        }
    }
    SUBCASE("sret from HS cannot return sideways or upwards") {
        MachineState s = blank_state();
        s.mode = Mode::HypSup;
        s.csr.sstatus = 1; // HS itself
        CHECK_THROWS_AS(trap_return(s, Op::SRET), Error);
        s.csr.sstatus = 3; // machine
        CHECK_THROWS_AS(trap_return(s, Op::SRET), Error);
        s.csr.sstatus = 6; // illegal encoding
        CHECK_THROWS_AS(trap_return(s, Op::SRET), Error);
    }
    SUBCASE("mret follows mstatus to any lower mode") {
        struct Row {
            uint32_t mstatus;
            Mode mode;
        };
        for (Row row : {Row{0, Mode::User}, Row{1, Mode::HypSup},
                        Row{4, Mode::VirtUser}, Row{5, Mode::VirtSup}}) {
            MachineState s = blank_state();
            s.mode = Mode::Machine;
            s.csr.mepc = 0x80000008;
            s.csr.mstatus = row.mstatus;
            trap_return(s, Op::MRET);
            CHECK(s.mode == row.mode);
            CHECK(s.pc == 0x8000000C);
        }
        MachineState s = blank_state();
        s.mode = Mode::Machine;
        s.csr.mstatus = 3; // returning to M is not a return
        CHECK_THROWS_AS(trap_return(s, Op::MRET), Error);
    }
    SUBCASE("returns need privilege") {
        MachineState s = blank_state();
        s.mode = Mode::User;
        CHECK_THROWS_AS(trap_return(s, Op::SRET), Error);
        s.mode = Mode::VirtUser;
        CHECK_THROWS_AS(trap_return(s, Op::SRET), Error);
        s.mode = Mode::HypSup;
        CHECK_THROWS_AS(trap_return(s, Op::MRET), Error);
    }
}

TEST_CASE("exit call halts in place from any mode, a7 selects it") {
    SimConfig cfg;
    // a7 != 93 from user mode traps instead of exiting; without a handler
    // body at the vector the run just keeps going into zero words and
    // faults on the illegal instruction.
    MachineState s = tu::boot_asm("li a7, 60\necall", cfg);
    expect_program_fault(s);

    // Exit works from VS mode too (the guest OS may terminate directly).
    MachineState vs = tu::boot_system("li a7, 90\necall",
                                      "li a7, 93\necall", "", "",
                                      [] {
                                          SimConfig c;
                                          c.virtualized = true;
                                          return c;
                                      }());
    auto records = run_collect(vs, 100);
    CHECK(vs.halted);
    CHECK(records.back().exit_call);
    CHECK(records.back().v == 1);
    CHECK(records.back().prv == 1);
    CHECK(vs.pc == cfg.vstvec_reset + 4);
}

TEST_CASE("console: an exact-address store is captured, memory untouched") {
    SimConfig cfg;
    MachineState s = tu::boot_asm(R"(
        li x5, 0x80030000
        li x6, 0x48
        sb x6, 0(x5)
        li x6, 0x69
        sb x6, 0(x5)
        lw x7, 0(x5)
        li a7, 93
        ecall
    )",
                                  cfg);
    run_collect(s, 100);
    CHECK(s.console == "Hi");
    CHECK(s.reg(7) == 0); // the console address never hits memory
    CHECK(s.mem.read32(0x80030000) == 0);

    // console_store as a unit: only the exact address qualifies.
    MachineState t = blank_state();
    CHECK(console_store(t, t.cfg.console_addr, 0x21));
    CHECK(!console_store(t, t.cfg.console_addr + 4, 0x21));
    CHECK(t.console == "!");
}

TEST_CASE("faults: ebreak, illegal words, misalignment, window escapes") {
    SimConfig cfg;

    SUBCASE("ebreak faults") {
        MachineState s = tu::boot_asm("ebreak", cfg);
        expect_program_fault(s);
    }
    SUBCASE("illegal instruction faults") {
        MachineState s = tu::boot_asm(".word 0xFFFFFFFF", cfg);
        expect_program_fault(s);
    }
    SUBCASE("misaligned lw faults") {
        MachineState s = tu::boot_asm("li x5, 0x20002\nlw x6, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("misaligned lh faults") {
        MachineState s = tu::boot_asm("li x5, 0x20001\nlh x6, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("misaligned sw faults") {
        MachineState s = tu::boot_asm("li x5, 0x20001\nsw x6, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("byte accesses are never misaligned") {
        MachineState s = tu::boot_asm(
            "li x5, 0x20003\nlb x6, 0(x5)\nsb x6, 0(x5)\nli a7, 93\necall",
            cfg);
        CHECK_NOTHROW(run_collect(s, 100));
    }
    SUBCASE("jalr to a half-word target faults at the jump") {
        MachineState s = tu::boot_asm("li x5, 0x10006\njalr x0, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("fetch past the mapped window faults") {
        MachineState s = tu::boot_asm("li x5, 0x60000\njalr x0, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("load past the mapped window faults") {
        MachineState s = tu::boot_asm("li x5, 0x60000\nlw x6, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("store past the mapped window faults") {
        MachineState s = tu::boot_asm("li x5, 0x5FFFE\nsw x6, 0(x5)", cfg);
        expect_program_fault(s);
    }
    SUBCASE("cross-region data access inside the window is allowed") {
        // The model carries no protection bits: the hypervisor reads guest
        // buffers through plain loads, and the same path is open upward.
        MachineState s = tu::boot_asm(
            "li x5, 0x40000000\nlw x6, 0(x5)\nli a7, 93\necall", cfg);
        CHECK_NOTHROW(run_collect(s, 100));
        CHECK(s.reg(6) == 0);
    }
}

TEST_CASE("run: budget is checked before each step") {
    SimConfig cfg;
    MachineState s = tu::boot_asm("loop: j loop", cfg);
    size_t seen = 0;
    try {
        functional::run(s, 10, [&](const trace::TraceRecord&) { ++seen; });
        FAIL_CHECK("expected Error{LimitExhausted}");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LimitExhausted);
    }
    CHECK(seen == 10);
    CHECK(s.instret == 10);

    // A budget of zero produces nothing, not even one step.
    MachineState z = tu::boot_asm("loop: j loop", cfg);
    try {
        functional::run(z, 0, [](const trace::TraceRecord&) {});
        FAIL_CHECK("expected Error{LimitExhausted}");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LimitExhausted);
    }
    CHECK(z.instret == 0);
}
