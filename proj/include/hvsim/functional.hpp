#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "hvsim/config.hpp"
#include "hvsim/image.hpp"
#include "hvsim/rv32i.hpp"
#include "hvsim/trace.hpp"

namespace hvsim::functional {

// The control and status registers the simulator implements, one trap frame
// per handling level. The *status registers hold the previous mode as
// (v << 2) | prv in their low three bits; everything else in them reads as
// zero.
struct CsrFile {
    uint32_t sstatus = 0;
    uint32_t stvec = 0;
    uint32_t sepc = 0;
    uint32_t scause = 0;
    uint32_t vsstatus = 0;
    uint32_t vstvec = 0;
    uint32_t vsepc = 0;
    uint32_t vscause = 0;
    uint32_t mstatus = 0;
    uint32_t medeleg = 0;
    uint32_t mtvec = 0;
    uint32_t mepc = 0;
    uint32_t mcause = 0;

    // Raw access by CSR address, no privilege checks. Raises Error{Program}
    // for unimplemented addresses.
    uint32_t read(uint16_t addr) const;
    void write(uint16_t addr, uint32_t value);
};

// Privilege rank used for CSR access checks: a mode may touch CSRs of its
// own level and below. VS sits between user and HS.
int mode_level(Mode m);
int csr_level(uint16_t addr);

// Complete architectural + simulation state of the executing hart.
struct MachineState {
    std::array<uint32_t, 32> x{};
    uint32_t pc = 0;
    CsrFile csr;
    Mode mode = Mode::User;
    image::MemoryImage mem;
    uint64_t instret = 0;
    bool halted = false;
    std::string console;

    // Execution window: fetches outside any mapped area fault.
    SimConfig cfg;

    uint32_t reg(uint8_t i) const { return x[i]; }
    void set_reg(uint8_t i, uint32_t v) {
        if (i != 0) x[i] = v;
    }
};

// Builds the reset state for an image: pc at the entry point, mode User or
// VirtUser according to cfg.virtualized, trap vectors at their reset values,
// sp at the top of the user stack, gp/tp at the HS and VS kernel stack tops.
MachineState make_entry_state(image::MemoryImage image, const SimConfig& cfg);

// Executes one instruction and returns its trace record. Advances pc,
// instret, registers, memory and mode. Traps and mode returns are part of
// the instruction's execution. Raises Error{Program} on faults; state is
// not guaranteed usable afterwards.
trace::TraceRecord step(MachineState& s);

// CSR read-modify-write helper; op is one of the six CSR instruction
// classes. Returns the pre-modification CSR value. Write side is skipped
// for CSRRS/CSRRC (and immediate forms) when the source is zero.
uint32_t csr_op(MachineState& s, Op op, uint16_t addr, uint8_t rs1_or_uimm);

// ECALL trap routing: picks the handling level from the current mode,
// writes cause/epc/status at that level, jumps to the trap vector and
// switches mode. ECALL from Machine mode is an error.
void take_ecall_trap(MachineState& s);

// SRET/MRET: restores the mode recorded by the matching trap and resumes at
// epc + 4.
void trap_return(MachineState& s, Op op);

// A store whose target is exactly cfg.console_addr appends the low byte to
// the console buffer and leaves memory untouched. Returns true when the
// store was consumed by the console.
bool console_store(MachineState& s, uint32_t addr, uint32_t value);

using TraceSink = std::function<void(const trace::TraceRecord&)>;

// Runs until the program exits, feeding every record to sink. Raises
// Error{LimitExhausted} if max_instructions records were produced without
// an exit call.
void run(MachineState& s, uint64_t max_instructions, const TraceSink& sink);

// Convenience form collecting the whole trace.
std::vector<trace::TraceRecord> run_collect(MachineState& s,
                                            uint64_t max_instructions);

} // namespace hvsim::functional
