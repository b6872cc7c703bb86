#include "hvsim/rv32i.hpp"

#include <array>
#include <cstdio>

namespace hvsim {

namespace {

constexpr uint32_t kOpLui = 0x37;
constexpr uint32_t kOpAuipc = 0x17;
constexpr uint32_t kOpJal = 0x6F;
constexpr uint32_t kOpJalr = 0x67;
constexpr uint32_t kOpBranch = 0x63;
constexpr uint32_t kOpLoad = 0x03;
constexpr uint32_t kOpStore = 0x23;
constexpr uint32_t kOpImm = 0x13;
constexpr uint32_t kOpReg = 0x33;
constexpr uint32_t kOpFence = 0x0F;
constexpr uint32_t kOpSystem = 0x73;

int32_t imm_i(uint32_t w) { return int32_t(w) >> 20; }

int32_t imm_s(uint32_t w) {
    return ((int32_t(w) >> 25) << 5) | int32_t((w >> 7) & 0x1F);
}

int32_t imm_b(uint32_t w) {
    int32_t imm = (int32_t(w) >> 31) << 12;       // bit 12
    imm |= int32_t((w >> 25) & 0x3F) << 5;        // bits 10:5
    imm |= int32_t((w >> 8) & 0xF) << 1;          // bits 4:1
    imm |= int32_t((w >> 7) & 0x1) << 11;         // bit 11
    return imm;
}

int32_t imm_j(uint32_t w) {
    int32_t imm = (int32_t(w) >> 31) << 20;       // bit 20
    imm |= int32_t((w >> 21) & 0x3FF) << 1;       // bits 10:1
    imm |= int32_t((w >> 20) & 0x1) << 11;        // bit 11
    imm |= int32_t(w & 0xFF000);                  // bits 19:12
    return imm;
}

} // namespace

DecodedInstr decode(uint32_t w) {
    DecodedInstr d;
    uint32_t opcode = w & 0x7F;
    uint8_t rd = uint8_t((w >> 7) & 0x1F);
    uint32_t funct3 = (w >> 12) & 0x7;
    uint8_t rs1 = uint8_t((w >> 15) & 0x1F);
    uint8_t rs2 = uint8_t((w >> 20) & 0x1F);
    uint32_t funct7 = w >> 25;

    switch (opcode) {
    case kOpLui:
        d.op = Op::LUI;
        d.rd = rd;
        d.imm = int32_t(w & 0xFFFFF000);
        return d;
    case kOpAuipc:
        d.op = Op::AUIPC;
        d.rd = rd;
        d.imm = int32_t(w & 0xFFFFF000);
        return d;
    case kOpJal:
        d.op = Op::JAL;
        d.rd = rd;
        d.imm = imm_j(w);
        return d;
    case kOpJalr:
        if (funct3 != 0) return d;
        d.op = Op::JALR;
        d.rd = rd;
        d.rs1 = rs1;
        d.imm = imm_i(w);
        return d;
    case kOpBranch: {
        static constexpr Op ops[8] = {Op::BEQ,     Op::BNE,  Op::ILLEGAL,
                                      Op::ILLEGAL, Op::BLT,  Op::BGE,
                                      Op::BLTU,    Op::BGEU};
        if (ops[funct3] == Op::ILLEGAL) return d;
        d.op = ops[funct3];
        d.rs1 = rs1;
        d.rs2 = rs2;
        d.imm = imm_b(w);
        return d;
    }
    case kOpLoad: {
        static constexpr Op ops[8] = {Op::LB,  Op::LH,  Op::LW, Op::ILLEGAL,
                                      Op::LBU, Op::LHU, Op::ILLEGAL,
                                      Op::ILLEGAL};
        if (ops[funct3] == Op::ILLEGAL) return d;
        d.op = ops[funct3];
        d.rd = rd;
        d.rs1 = rs1;
        d.imm = imm_i(w);
        return d;
    }
    case kOpStore: {
        static constexpr Op ops[8] = {Op::SB,      Op::SH,      Op::SW,
                                      Op::ILLEGAL, Op::ILLEGAL, Op::ILLEGAL,
                                      Op::ILLEGAL, Op::ILLEGAL};
        if (ops[funct3] == Op::ILLEGAL) return d;
        d.op = ops[funct3];
        d.rs1 = rs1;
        d.rs2 = rs2;
        d.imm = imm_s(w);
        return d;
    }
    case kOpImm: {
        d.rd = rd;
        d.rs1 = rs1;
        switch (funct3) {
        case 0: d.op = Op::ADDI; d.imm = imm_i(w); return d;
        case 2: d.op = Op::SLTI; d.imm = imm_i(w); return d;
        case 3: d.op = Op::SLTIU; d.imm = imm_i(w); return d;
        case 4: d.op = Op::XORI; d.imm = imm_i(w); return d;
        case 6: d.op = Op::ORI; d.imm = imm_i(w); return d;
        case 7: d.op = Op::ANDI; d.imm = imm_i(w); return d;
        case 1:
            if (funct7 != 0) break;
            d.op = Op::SLLI;
            d.imm = rs2; // shamt
            return d;
        case 5:
            if (funct7 == 0x00) { d.op = Op::SRLI; d.imm = rs2; return d; }
            if (funct7 == 0x20) { d.op = Op::SRAI; d.imm = rs2; return d; }
            break;
        }
        return DecodedInstr{};
    }
    case kOpReg: {
        Op op = Op::ILLEGAL;
        if (funct7 == 0x00) {
            static constexpr Op ops[8] = {Op::ADD, Op::SLL, Op::SLT,
                                          Op::SLTU, Op::XOR, Op::SRL,
                                          Op::OR, Op::AND};
            op = ops[funct3];
        } else if (funct7 == 0x20) {
            if (funct3 == 0) op = Op::SUB;
            else if (funct3 == 5) op = Op::SRA;
        }
        if (op == Op::ILLEGAL) return d;
        d.op = op;
        d.rd = rd;
        d.rs1 = rs1;
        d.rs2 = rs2;
        return d;
    }
    case kOpFence:
        if (funct3 != 0) return d;
        d.op = Op::FENCE;
        return d;
    case kOpSystem:
        if (funct3 == 0) {
            // Exact-word system instructions.
            if (w == 0x00000073) { d.op = Op::ECALL; return d; }
            if (w == 0x00100073) { d.op = Op::EBREAK; return d; }
            if (w == 0x10200073) { d.op = Op::SRET; return d; }
            if (w == 0x30200073) { d.op = Op::MRET; return d; }
            return d;
        }
        {
            static constexpr Op ops[8] = {Op::ILLEGAL, Op::CSRRW, Op::CSRRS,
                                          Op::CSRRC,   Op::ILLEGAL, Op::CSRRWI,
                                          Op::CSRRSI,  Op::CSRRCI};
            Op op = ops[funct3];
            if (op == Op::ILLEGAL) return d;
            d.op = op;
            d.rd = rd;
            d.csr = uint16_t(w >> 20);
            if (op == Op::CSRRWI || op == Op::CSRRSI || op == Op::CSRRCI)
                d.imm = rs1; // zero-extended uimm, rs1 stays 0
            else
                d.rs1 = rs1;
            return d;
        }
    default:
        return d;
    }
}

const char* op_name(Op op) {
    switch (op) {
    case Op::LUI: return "lui";
    case Op::AUIPC: return "auipc";
    case Op::JAL: return "jal";
    case Op::JALR: return "jalr";
    case Op::BEQ: return "beq";
    case Op::BNE: return "bne";
    case Op::BLT: return "blt";
    case Op::BGE: return "bge";
    case Op::BLTU: return "bltu";
    case Op::BGEU: return "bgeu";
    case Op::LB: return "lb";
    case Op::LH: return "lh";
    case Op::LW: return "lw";
    case Op::LBU: return "lbu";
    case Op::LHU: return "lhu";
    case Op::SB: return "sb";
    case Op::SH: return "sh";
    case Op::SW: return "sw";
    case Op::ADDI: return "addi";
    case Op::SLTI: return "slti";
    case Op::SLTIU: return "sltiu";
    case Op::XORI: return "xori";
    case Op::ORI: return "ori";
    case Op::ANDI: return "andi";
    case Op::SLLI: return "slli";
    case Op::SRLI: return "srli";
    case Op::SRAI: return "srai";
    case Op::ADD: return "add";
    case Op::SUB: return "sub";
    case Op::SLL: return "sll";
    case Op::SLT: return "slt";
    case Op::SLTU: return "sltu";
    case Op::XOR: return "xor";
    case Op::SRL: return "srl";
    case Op::SRA: return "sra";
    case Op::OR: return "or";
    case Op::AND: return "and";
    case Op::FENCE: return "fence";
    case Op::ECALL: return "ecall";
    case Op::EBREAK: return "ebreak";
    case Op::SRET: return "sret";
    case Op::MRET: return "mret";
    case Op::CSRRW: return "csrrw";
    case Op::CSRRS: return "csrrs";
    case Op::CSRRC: return "csrrc";
    case Op::CSRRWI: return "csrrwi";
    case Op::CSRRSI: return "csrrsi";
    case Op::CSRRCI: return "csrrci";
    case Op::ILLEGAL: return "illegal";
    }
    return "?";
}

uint32_t encode_r(uint32_t opcode, uint32_t funct3, uint32_t funct7,
                  uint32_t rd, uint32_t rs1, uint32_t rs2) {
    return opcode | (rd << 7) | (funct3 << 12) | (rs1 << 15) | (rs2 << 20) |
           (funct7 << 25);
}

uint32_t encode_i(uint32_t opcode, uint32_t funct3, uint32_t rd, uint32_t rs1,
                  int32_t imm) {
    return opcode | (rd << 7) | (funct3 << 12) | (rs1 << 15) |
           (uint32_t(imm) << 20);
}

uint32_t encode_s(uint32_t opcode, uint32_t funct3, uint32_t rs1, uint32_t rs2,
                  int32_t imm) {
    uint32_t u = uint32_t(imm);
    return opcode | ((u & 0x1F) << 7) | (funct3 << 12) | (rs1 << 15) |
           (rs2 << 20) | ((u >> 5 & 0x7F) << 25);
}

uint32_t encode_b(uint32_t opcode, uint32_t funct3, uint32_t rs1, uint32_t rs2,
                  int32_t imm) {
    uint32_t u = uint32_t(imm);
    return opcode | ((u >> 11 & 0x1) << 7) | ((u >> 1 & 0xF) << 8) |
           (funct3 << 12) | (rs1 << 15) | (rs2 << 20) |
           ((u >> 5 & 0x3F) << 25) | ((u >> 12 & 0x1) << 31);
}

uint32_t encode_u(uint32_t opcode, uint32_t rd, uint32_t imm_31_12) {
    return opcode | (rd << 7) | (imm_31_12 << 12);
}

uint32_t encode_j(uint32_t opcode, uint32_t rd, int32_t imm) {
    uint32_t u = uint32_t(imm);
    return opcode | (rd << 7) | (u & 0xFF000) | ((u >> 11 & 0x1) << 20) |
           ((u >> 1 & 0x3FF) << 21) | ((u >> 20 & 0x1) << 31);
}

namespace {

constexpr const char* kAbiNames[32] = {
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
    "s0",   "s1", "a0", "a1", "a2", "a3", "a4", "a5",
    "a6",   "a7", "s2", "s3", "s4", "s5", "s6", "s7",
    "s8",   "s9", "s10", "s11", "t3", "t4", "t5", "t6"};

constexpr const char* kXNames[32] = {
    "x0",  "x1",  "x2",  "x3",  "x4",  "x5",  "x6",  "x7",
    "x8",  "x9",  "x10", "x11", "x12", "x13", "x14", "x15",
    "x16", "x17", "x18", "x19", "x20", "x21", "x22", "x23",
    "x24", "x25", "x26", "x27", "x28", "x29", "x30", "x31"};

struct CsrEntry {
    const char* name;
    uint16_t addr;
};

constexpr CsrEntry kCsrTable[] = {
    {"sstatus", kCsrSstatus},   {"stvec", kCsrStvec},
    {"sepc", kCsrSepc},         {"scause", kCsrScause},
    {"vsstatus", kCsrVsstatus}, {"vstvec", kCsrVstvec},
    {"vsepc", kCsrVsepc},       {"vscause", kCsrVscause},
    {"mstatus", kCsrMstatus},   {"medeleg", kCsrMedeleg},
    {"mtvec", kCsrMtvec},       {"mepc", kCsrMepc},
    {"mcause", kCsrMcause},
};

} // namespace

std::optional<uint8_t> parse_reg(std::string_view name) {
    if (name.size() >= 2 && name[0] == 'x') {
        uint32_t n = 0;
        for (size_t i = 1; i < name.size(); ++i) {
            if (name[i] < '0' || name[i] > '9') return std::nullopt;
            n = n * 10 + uint32_t(name[i] - '0');
            if (n > 31) return std::nullopt;
        }
        if (name.size() > 2 && name[1] == '0') return std::nullopt; // x01 etc.
        return uint8_t(n);
    }
    if (name == "fp") return 8;
    for (uint8_t i = 0; i < 32; ++i)
        if (name == kAbiNames[i]) return i;
    return std::nullopt;
}

const char* reg_name(uint8_t index) { return kXNames[index & 31]; }

std::optional<uint16_t> parse_csr(std::string_view name) {
    for (const auto& e : kCsrTable)
        if (name == e.name) return e.addr;
    return std::nullopt;
}

std::optional<std::string_view> csr_name(uint16_t addr) {
    for (const auto& e : kCsrTable)
        if (addr == e.addr) return std::string_view(e.name);
    return std::nullopt;
}

} // namespace hvsim
