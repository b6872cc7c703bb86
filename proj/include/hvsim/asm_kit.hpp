#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hvsim::asm_kit {

// A contiguous run of instruction/data words anchored at a base address,
// together with the labels defined while assembling it.
struct CodeBlob {
    uint32_t base = 0;
    std::vector<uint32_t> words;
    std::map<std::string, uint32_t> symbols;

    uint32_t end() const { return base + uint32_t(4 * words.size()); }
    bool contains(uint32_t addr) const { return addr >= base && addr < end(); }
};

// Two-pass assembler for the subset the simulator executes.
//
// Grammar, one statement per line, '#' starts a comment:
//   label:                 (may share a line with a statement)
//   .org ADDR              move the location counter forward
//   .word VALUE|LABEL      emit one literal word
//   .space N               emit N/4 zero words (N divisible by 4)
//   mnemonic operands      e.g.  addi sp, sp, -16   /   lw t0, 8(a0)
//
// Registers accept xN or ABI names. Branch and jump targets are labels or
// numeric byte offsets relative to the instruction. CSR operands are
// symbolic names or numeric addresses. Pseudo-instructions: nop, li, j, mv.
// Errors carry the 1-based source line in the message.
CodeBlob assemble(std::string_view source, uint32_t origin);

// Canonical one-instruction disassembly: xN register names, signed decimal
// immediates (hex for lui/auipc), pc-relative byte offsets for branches and
// jumps. Undecodable words render as ".word 0x........".
std::string disassemble(uint32_t word);

// Address/word/disassembly listing for a whole blob.
std::string hex_listing(const CodeBlob& blob);

// Little-endian flat byte image of the blob's words.
std::vector<uint8_t> to_bytes(const CodeBlob& blob);

} // namespace hvsim::asm_kit
