#pragma once

// Hand-checked conformance battery. Every expected register/memory value in
// this file was computed by hand from the instruction definitions (sign
// extension, wrap-around, shift-amount masking, ...) before the programs
// were ever run, and is never regenerated from simulator output.
//
// Unprivileged cases are plain user programs that compute into registers
// and exit. System cases add hand-written trap handlers and check the CSR
// values those handlers observed, covering the full mode lattice.

#include <cstdint>
#include <vector>

#include "hvsim/config.hpp"

namespace isa_cases {

struct RegCheck {
    uint8_t reg;
    uint32_t value;
};

struct MemCheck {
    uint32_t addr;
    uint32_t value;
};

struct IsaCase {
    const char* name;
    const char* source; // runs at the user entry point, exits via ecall 93
    std::vector<RegCheck> regs;
    std::vector<MemCheck> mem;
    std::vector<uint32_t> data; // placed at 0x00020000 when nonempty
};

inline const char* kExit = R"(
    li a7, 93
    ecall
)";

inline std::vector<IsaCase> unprivileged() {
    std::vector<IsaCase> cases;

    cases.push_back({
        "addi_basic",
        R"(
            li x5, 100
            addi x6, x5, 23
            addi x7, x5, -101
            li a7, 93
            ecall
        )",
        {{5, 100}, {6, 123}, {7, 0xFFFFFFFF}},
        {},
        {},
    });

    cases.push_back({
        "add_sub_wrap",
        R"(
            li x5, -1
            li x6, 2
            add x7, x5, x6
            sub x28, x6, x5
            sub x29, x5, x6
            li a7, 93
            ecall
        )",
        // 0xFFFFFFFF + 2 wraps to 1; 2 - (-1) = 3; -1 - 2 = -3.
        {{7, 1}, {28, 3}, {29, 0xFFFFFFFD}},
        {},
        {},
    });

    cases.push_back({
        "slt_family",
        R"(
            li x5, -1
            li x6, 1
            slt x7, x5, x6
            sltu x28, x5, x6
            slt x29, x6, x5
            sltu x30, x6, x5
            slti x31, x5, 0
            sltiu x9, x5, -1
            sltiu x18, x0, -1
            li a7, 93
            ecall
        )",
        // Signed: -1 < 1. Unsigned: 0xFFFFFFFF is the largest value, and the
        // immediate -1 sign-extends to 0xFFFFFFFF for sltiu.
        {{7, 1}, {28, 0}, {29, 0}, {30, 1}, {31, 1}, {9, 0}, {18, 1}},
        {},
        {},
    });

    cases.push_back({
        "logic_ops",
        R"(
            li x5, 0x0F0F
            li x6, 0xFF
            xor x7, x5, x6
            or x28, x5, x6
            and x29, x5, x6
            xori x30, x6, -1
            ori x31, x6, 0x700
            andi x9, x5, 0xFF
            li a7, 93
            ecall
        )",
        {{7, 0x0FF0},
         {28, 0x0FFF},
         {29, 0x000F},
         {30, 0xFFFFFF00},
         {31, 0x07FF},
         {9, 0x0F}},
        {},
        {},
    });

    cases.push_back({
        "shift_ops",
        R"(
            li x5, 1
            slli x6, x5, 31
            srli x7, x6, 31
            srai x28, x6, 31
            li x9, 36
            sll x29, x5, x9
            li x10, 0x80000000
            sra x30, x10, x9
            srl x31, x10, x9
            li a7, 93
            ecall
        )",
        // Register shift amounts use only the low five bits: 36 & 31 = 4.
        {{6, 0x80000000},
         {7, 1},
         {28, 0xFFFFFFFF},
         {29, 16},
         {30, 0xF8000000},
         {31, 0x08000000}},
        {},
        {},
    });

    cases.push_back({
        "lui_auipc",
        R"(
            lui x5, 0xDEADB
            auipc x6, 0
            auipc x7, 0x1
            li a7, 93
            ecall
        )",
        // auipc adds the shifted immediate to its own pc: the second and
        // third instructions sit at 0x10004 and 0x10008.
        {{5, 0xDEADB000}, {6, 0x00010004}, {7, 0x00011008}},
        {},
        {},
    });

    cases.push_back({
        "jal_jalr_link",
        R"(
            jal x1, target
            li x5, 111
            j out
        target:
            li x6, 222
            jalr x7, 0(x1)
            li x9, 99
        out:
            li a7, 93
            ecall
        )",
        // jal links 0x10004 and lands on target (0x1000C); jalr links
        // 0x10014 and returns into the skipped li, whose j skips the final
        // li x9. Addresses: entry 0x10000, one word per statement.
        {{1, 0x00010004}, {5, 111}, {6, 222}, {7, 0x00010014}, {9, 0}},
        {},
        {},
    });

    cases.push_back({
        "jalr_clears_lsb",
        R"(
            jal x1, skip
            li x5, 77
            j out
        skip:
            jalr x6, 1(x1)
            li x9, 88
        out:
            li a7, 93
            ecall
        )",
        // x1 + 1 = 0x10005; the low bit is discarded, so control lands on
        // the li x5 at 0x10004 and the li x9 at 0x10010 is never reached.
        {{1, 0x00010004}, {5, 77}, {6, 0x00010010}, {9, 0}},
        {},
        {},
    });

    cases.push_back({
        "branch_matrix",
        R"(
            li x5, -1
            li x6, 1
            beq x5, x5, l1
            li x9, 1
        l1:
            bne x5, x6, l2
            li x9, 2
        l2:
            blt x5, x6, l3
            li x9, 3
        l3:
            bltu x5, x6, l4
            li x28, 4
        l4:
            bge x6, x5, l5
            li x9, 5
        l5:
            bgeu x5, x6, l6
            li x9, 6
        l6:
            bge x5, x6, l7
            li x29, 7
        l7:
            li a7, 93
            ecall
        )",
        // Signed vs unsigned disagree on -1 vs 1: bltu falls through (x28
        // executes) and bgeu is taken. The final bge falls through (x29).
        {{9, 0}, {28, 4}, {29, 7}},
        {},
        {},
    });

    cases.push_back({
        "branch_backward_loop",
        R"(
            li x5, 0
            li x6, 5
        loop:
            addi x5, x5, 1
            bne x5, x6, loop
            li a7, 93
            ecall
        )",
        {{5, 5}, {6, 5}},
        {},
        {},
    });

    cases.push_back({
        "load_extension",
        R"(
            li x5, 0x20000
            lw x6, 0(x5)
            lb x7, 0(x5)
            lbu x28, 0(x5)
            lb x9, 3(x5)
            lh x29, 0(x5)
            lhu x30, 0(x5)
            lh x31, 2(x5)
            lw x18, 4(x5)
            lh x19, 4(x5)
            lhu x20, 4(x5)
            lb x21, 4(x5)
            addi x22, x5, 8
            lw x23, -8(x22)
            li a7, 93
            ecall
        )",
        // 0xDEADBEEF little-endian: bytes EF BE AD DE. Sign extension picks
        // up 0xEF/0xBEEF/0xDEAD; the 0x00008000 word flips sign only for lh.
        {{6, 0xDEADBEEF},
         {7, 0xFFFFFFEF},
         {28, 0x000000EF},
         {9, 0xFFFFFFDE},
         {29, 0xFFFFBEEF},
         {30, 0x0000BEEF},
         {31, 0xFFFFDEAD},
         {18, 0x00008000},
         {19, 0xFFFF8000},
         {20, 0x00008000},
         {21, 0},
         {23, 0xDEADBEEF}},
        {},
        {0xDEADBEEF, 0x00008000},
    });

    cases.push_back({
        "store_merge",
        R"(
            li x5, 0x20000
            li x6, 0x11223344
            sw x6, 0(x5)
            li x7, 0xAB
            sb x7, 1(x5)
            li x9, 0xCDEF
            sh x9, 2(x5)
            lw x28, 0(x5)
            sb x6, 4(x5)
            lb x29, 4(x5)
            li x30, 0x80
            sb x30, 8(x5)
            lb x31, 8(x5)
            lbu x18, 8(x5)
            sh x6, 12(x5)
            lhu x19, 12(x5)
            li a7, 93
            ecall
        )",
        // Byte and halfword stores merge into the word: 0x11223344 becomes
        // 0x1122AB44 and then 0xCDEFAB44. sb/sh keep only the low lanes of
        // the source, and lb sign-extends the stored 0x80.
        {{28, 0xCDEFAB44},
         {29, 0x44},
         {31, 0xFFFFFF80},
         {18, 0x80},
         {19, 0x3344}},
        {{0x20000, 0xCDEFAB44},
         {0x20004, 0x44},
         {0x20008, 0x80},
         {0x2000C, 0x3344}},
        {},
    });

    cases.push_back({
        "x0_immutable",
        R"(
            li x5, 7
            add x0, x5, x5
            addi x0, x0, 9
            sub x6, x0, x5
            li a7, 93
            ecall
        )",
        {{0, 0}, {6, 0xFFFFFFF9}},
        {},
        {},
    });

    cases.push_back({
        "fence_is_nop",
        R"(
            li x5, 3
            fence
            addi x5, x5, 4
            li a7, 93
            ecall
        )",
        {{5, 7}},
        {},
        {},
    });

    return cases;
}

// Trap-path cases: the handlers stash the CSR values they observe into
// saved registers, which the final state exposes for checking.
struct SysCase {
    const char* name;
    bool virtualized;
    const char* user;
    const char* os;      // placed at the VS vector; may be empty
    const char* hv;      // placed at the HS vector; may be empty
    const char* machine; // placed at the M vector; may be empty
    std::vector<RegCheck> regs;
    uint32_t final_pc;
    hvsim::Mode final_mode;
};

inline std::vector<SysCase> system_cases() {
    std::vector<SysCase> cases;

    // Virtualized round trip: VU ecall delegates to VS; the guest OS makes
    // a hypercall to HS; both levels return and user code resumes.
    cases.push_back({
        "virt_delegation_chain",
        true,
        R"(
            li x5, 1
            ecall
            li x6, 2
            li a7, 93
            ecall
        )",
        R"(
            csrrs x20, vscause, x0
            csrrs x21, vsepc, x0
            csrrs x22, vsstatus, x0
            ecall
            sret
        )",
        R"(
            csrrs x23, scause, x0
            csrrs x24, sepc, x0
            csrrs x25, sstatus, x0
            sret
        )",
        "",
        // vscause 8 (ecall from VU), vsepc = user ecall at 0x10004,
        // vsstatus = (v=1,prv=00) -> 4; scause 10 (ecall from VS),
        // sepc = OS hypercall at 0x4000000C, sstatus = (v=1,prv=01) -> 5.
        {{5, 1},
         {6, 2},
         {20, 8},
         {21, 0x00010004},
         {22, 4},
         {23, 10},
         {24, 0x4000000C},
         {25, 5}},
        0x00010010,
        hvsim::Mode::VirtUser,
    });

    // Non-virtualized chain through all privileged levels: U ecall lands in
    // HS, HS calls into M, both return.
    cases.push_back({
        "nonvirt_machine_chain",
        false,
        R"(
            ecall
            li x6, 42
            li a7, 93
            ecall
        )",
        "",
        R"(
            csrrs x23, scause, x0
            csrrs x25, sstatus, x0
            ecall
            sret
        )",
        R"(
            csrrs x28, mcause, x0
            csrrs x29, mepc, x0
            mret
        )",
        // scause 8 (ecall from U), sstatus = (0,00) -> 0; mcause 9 (ecall
        // from HS), mepc = HS ecall at 0x80000008.
        {{6, 42}, {23, 8}, {25, 0}, {28, 9}, {29, 0x80000008}},
        0x0001000C,
        hvsim::Mode::User,
    });

    return cases;
}

} // namespace isa_cases
