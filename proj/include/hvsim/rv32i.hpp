#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hvsim {

// Instruction classes of the RV32I base set plus the privileged handful the
// simulator understands (CSR ops, ECALL, SRET, MRET). EBREAK decodes but
// always faults when executed.
enum class Op : uint8_t {
    LUI, AUIPC, JAL, JALR,
    BEQ, BNE, BLT, BGE, BLTU, BGEU,
    LB, LH, LW, LBU, LHU,
    SB, SH, SW,
    ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI,
    ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND,
    FENCE, ECALL, EBREAK,
    SRET, MRET,
    CSRRW, CSRRS, CSRRC, CSRRWI, CSRRSI, CSRRCI,
    ILLEGAL,
};

// Decoded form of one instruction word. Register fields are populated only
// where the encoding format defines them and are zero otherwise, so rs1/rs2/
// rd can be read as "registers this instruction actually touches". For the
// immediate CSR ops the zero-extended uimm lands in imm and rs1 stays 0.
struct DecodedInstr {
    Op op = Op::ILLEGAL;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int32_t imm = 0;
    uint16_t csr = 0; // CSR address for the Zicsr ops

    bool is_load() const { return op >= Op::LB && op <= Op::LHU; }
    bool is_store() const { return op >= Op::SB && op <= Op::SW; }
    bool is_branch() const { return op >= Op::BEQ && op <= Op::BGEU; }
    bool is_csr() const { return op >= Op::CSRRW && op <= Op::CSRRCI; }
};

DecodedInstr decode(uint32_t word);
const char* op_name(Op op);

// Field packers for the six encoding formats. Immediates are validated by
// the assembler, not here; these just place bits.
uint32_t encode_r(uint32_t opcode, uint32_t funct3, uint32_t funct7,
                  uint32_t rd, uint32_t rs1, uint32_t rs2);
uint32_t encode_i(uint32_t opcode, uint32_t funct3, uint32_t rd, uint32_t rs1,
                  int32_t imm);
uint32_t encode_s(uint32_t opcode, uint32_t funct3, uint32_t rs1, uint32_t rs2,
                  int32_t imm);
uint32_t encode_b(uint32_t opcode, uint32_t funct3, uint32_t rs1, uint32_t rs2,
                  int32_t imm);
uint32_t encode_u(uint32_t opcode, uint32_t rd, uint32_t imm_31_12);
uint32_t encode_j(uint32_t opcode, uint32_t rd, int32_t imm);

// Register name handling: canonical xN names plus the standard ABI aliases
// (zero, ra, sp, gp, tp, t0-t6, s0-s11, a0-a7, fp).
std::optional<uint8_t> parse_reg(std::string_view name);
const char* reg_name(uint8_t index); // always the xN spelling

// CSR name <-> address mapping for the registers the simulator implements.
std::optional<uint16_t> parse_csr(std::string_view name);
std::optional<std::string_view> csr_name(uint16_t addr);

// CSR addresses.
inline constexpr uint16_t kCsrSstatus  = 0x100;
inline constexpr uint16_t kCsrStvec    = 0x105;
inline constexpr uint16_t kCsrSepc     = 0x141;
inline constexpr uint16_t kCsrScause   = 0x142;
inline constexpr uint16_t kCsrVsstatus = 0x200;
inline constexpr uint16_t kCsrVstvec   = 0x205;
inline constexpr uint16_t kCsrVsepc    = 0x241;
inline constexpr uint16_t kCsrVscause  = 0x242;
inline constexpr uint16_t kCsrMstatus  = 0x300;
inline constexpr uint16_t kCsrMedeleg  = 0x302;
inline constexpr uint16_t kCsrMtvec    = 0x305;
inline constexpr uint16_t kCsrMepc     = 0x341;
inline constexpr uint16_t kCsrMcause   = 0x342;

// Exception cause codes written by ECALL traps.
inline constexpr uint32_t kCauseEcallFromU  = 8;  // also VU -> VS
inline constexpr uint32_t kCauseEcallFromHS = 9;  // HS -> M
inline constexpr uint32_t kCauseEcallFromVS = 10; // VS -> HS

} // namespace hvsim
