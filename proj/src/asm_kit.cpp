#include "hvsim/asm_kit.hpp"

#include <cctype>
#include <cstdarg>
#include <cstdio>
#include <sstream>
#include <vector>

#include "hvsim/error.hpp"
#include "hvsim/rv32i.hpp"

namespace hvsim::asm_kit {

namespace {

[[noreturn]] void fail(size_t line, const std::string& what) {
    throw Error(ErrorKind::Asm, "asm line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(uint8_t(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(uint8_t(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_ident_start(char c) {
    return std::isalpha(uint8_t(c)) || c == '_' || c == '.';
}

bool is_ident_char(char c) {
    return std::isalnum(uint8_t(c)) || c == '_' || c == '.' || c == '$';
}

bool is_ident(std::string_view s) {
    if (s.empty() || !is_ident_start(s[0])) return false;
    for (char c : s)
        if (!is_ident_char(c)) return false;
    return true;
}

// Parses a signed numeric literal: decimal or 0x hex, optional leading '-'.
// Accepts the union of int32 and uint32 ranges.
std::optional<int64_t> parse_number(std::string_view s) {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        neg = s[0] == '-';
        s.remove_prefix(1);
    }
    if (s.empty()) return std::nullopt;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    }
    int64_t v = 0;
    for (char c : s) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else return std::nullopt;
        v = v * base + digit;
        if (v > int64_t(UINT32_MAX) + 1) return std::nullopt;
    }
    if (neg) v = -v;
    if (v < INT32_MIN || v > int64_t(UINT32_MAX)) return std::nullopt;
    return v;
}

// One source line reduced to structure: optional label, optional statement.
struct Line {
    size_t no = 0;
    std::string label;
    std::string mnemonic;
    std::vector<std::string> operands;
};

std::vector<Line> scan(std::string_view source) {
    std::vector<Line> lines;
    size_t pos = 0;
    size_t no = 0;
    while (pos <= source.size()) {
        size_t eol = source.find('\n', pos);
        std::string_view raw = source.substr(
            pos, eol == std::string_view::npos ? source.size() - pos
                                               : eol - pos);
        pos = eol == std::string_view::npos ? source.size() + 1 : eol + 1;
        ++no;

        if (size_t hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        raw = trim(raw);
        if (raw.empty()) continue;

        Line line;
        line.no = no;
        if (size_t colon = raw.find(':'); colon != std::string_view::npos) {
            std::string_view name = trim(raw.substr(0, colon));
            if (!is_ident(name))
                fail(no, "bad label '" + std::string(name) + "'");
            line.label = std::string(name);
            raw = trim(raw.substr(colon + 1));
        }
        if (!raw.empty()) {
            size_t sp = 0;
            while (sp < raw.size() && !std::isspace(uint8_t(raw[sp]))) ++sp;
            line.mnemonic = std::string(raw.substr(0, sp));
            std::string_view rest = trim(raw.substr(sp));
            size_t start = 0;
            while (start <= rest.size() && !rest.empty()) {
                size_t comma = rest.find(',', start);
                std::string_view piece =
                    comma == std::string_view::npos
                        ? rest.substr(start)
                        : rest.substr(start, comma - start);
                piece = trim(piece);
                if (piece.empty()) fail(no, "empty operand");
                line.operands.emplace_back(piece);
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

// Instruction shapes the parser distinguishes.
enum class Shape {
    RType,   // rd, rs1, rs2
    IAlu,    // rd, rs1, imm
    Shift,   // rd, rs1, shamt
    Load,    // rd, imm(rs1)
    Store,   // rs2, imm(rs1)
    Branch,  // rs1, rs2, target
    Jal,     // rd, target
    Jalr,    // rd, imm(rs1)
    Upper,   // rd, imm20
    Bare,    // no operands
    CsrReg,  // rd, csr, rs1
    CsrImm,  // rd, csr, uimm
};

struct Mnemonic {
    const char* name;
    Shape shape;
    uint32_t opcode;
    uint32_t funct3;
    uint32_t funct7;
};

constexpr Mnemonic kMnemonics[] = {
    {"add", Shape::RType, 0x33, 0, 0x00, }, {"sub", Shape::RType, 0x33, 0, 0x20},
    {"sll", Shape::RType, 0x33, 1, 0x00}, {"slt", Shape::RType, 0x33, 2, 0x00},
    {"sltu", Shape::RType, 0x33, 3, 0x00}, {"xor", Shape::RType, 0x33, 4, 0x00},
    {"srl", Shape::RType, 0x33, 5, 0x00}, {"sra", Shape::RType, 0x33, 5, 0x20},
    {"or", Shape::RType, 0x33, 6, 0x00}, {"and", Shape::RType, 0x33, 7, 0x00},
    {"addi", Shape::IAlu, 0x13, 0, 0}, {"slti", Shape::IAlu, 0x13, 2, 0},
    {"sltiu", Shape::IAlu, 0x13, 3, 0}, {"xori", Shape::IAlu, 0x13, 4, 0},
    {"ori", Shape::IAlu, 0x13, 6, 0}, {"andi", Shape::IAlu, 0x13, 7, 0},
    {"slli", Shape::Shift, 0x13, 1, 0x00}, {"srli", Shape::Shift, 0x13, 5, 0x00},
    {"srai", Shape::Shift, 0x13, 5, 0x20},
    {"lb", Shape::Load, 0x03, 0, 0}, {"lh", Shape::Load, 0x03, 1, 0},
    {"lw", Shape::Load, 0x03, 2, 0}, {"lbu", Shape::Load, 0x03, 4, 0},
    {"lhu", Shape::Load, 0x03, 5, 0},
    {"sb", Shape::Store, 0x23, 0, 0}, {"sh", Shape::Store, 0x23, 1, 0},
    {"sw", Shape::Store, 0x23, 2, 0},
    {"beq", Shape::Branch, 0x63, 0, 0}, {"bne", Shape::Branch, 0x63, 1, 0},
    {"blt", Shape::Branch, 0x63, 4, 0}, {"bge", Shape::Branch, 0x63, 5, 0},
    {"bltu", Shape::Branch, 0x63, 6, 0}, {"bgeu", Shape::Branch, 0x63, 7, 0},
    {"jal", Shape::Jal, 0x6F, 0, 0}, {"jalr", Shape::Jalr, 0x67, 0, 0},
    {"lui", Shape::Upper, 0x37, 0, 0}, {"auipc", Shape::Upper, 0x17, 0, 0},
    {"fence", Shape::Bare, 0x0F, 0, 0}, {"ecall", Shape::Bare, 0x73, 0, 0},
    {"ebreak", Shape::Bare, 0x73, 0, 0}, {"sret", Shape::Bare, 0x73, 0, 0},
    {"mret", Shape::Bare, 0x73, 0, 0},
    {"csrrw", Shape::CsrReg, 0x73, 1, 0}, {"csrrs", Shape::CsrReg, 0x73, 2, 0},
    {"csrrc", Shape::CsrReg, 0x73, 3, 0},
    {"csrrwi", Shape::CsrImm, 0x73, 5, 0}, {"csrrsi", Shape::CsrImm, 0x73, 6, 0},
    {"csrrci", Shape::CsrImm, 0x73, 7, 0},
};

const Mnemonic* find_mnemonic(const std::string& name) {
    for (const auto& m : kMnemonics)
        if (name == m.name) return &m;
    return nullptr;
}

uint8_t need_reg(const std::string& s, size_t line) {
    auto r = parse_reg(s);
    if (!r) fail(line, "bad register '" + s + "'");
    return *r;
}

int64_t need_number(const std::string& s, size_t line) {
    auto n = parse_number(s);
    if (!n) fail(line, "bad numeric literal '" + s + "'");
    return *n;
}

// "imm(reg)" with the immediate optional.
void parse_mem_operand(const std::string& s, size_t line, int64_t& imm,
                       uint8_t& reg) {
    size_t open = s.find('(');
    size_t close = s.rfind(')');
    if (open == std::string::npos || close != s.size() - 1 || close <= open)
        fail(line, "expected imm(reg), got '" + s + "'");
    std::string imm_part(trim(std::string_view(s).substr(0, open)));
    std::string reg_part(
        trim(std::string_view(s).substr(open + 1, close - open - 1)));
    imm = imm_part.empty() ? 0 : need_number(imm_part, line);
    reg = need_reg(reg_part, line);
}

void check_imm_range(int64_t v, int64_t lo, int64_t hi, size_t line,
                     const char* what) {
    if (v < lo || v > hi)
        fail(line, std::string(what) + " out of range: " + std::to_string(v));
}

uint16_t need_csr(const std::string& s, size_t line) {
    if (auto addr = parse_csr(s)) return *addr;
    if (auto n = parse_number(s)) {
        if (*n >= 0 && *n <= 0xFFF) return uint16_t(*n);
    }
    fail(line, "bad CSR '" + s + "'");
}

bool fits_simm12(int64_t v) { return v >= -2048 && v <= 2047; }

// li folds to one addi when the value, viewed as a signed word, fits twelve
// bits; both passes must agree on this.
bool li_is_short(int64_t v64) { return fits_simm12(int32_t(uint32_t(v64))); }

// Number of words a statement will occupy; li is the only variable one.
uint32_t statement_words(const Line& line) {
    if (line.mnemonic == "li") {
        if (line.operands.size() != 2) fail(line.no, "li needs rd, imm");
        return li_is_short(need_number(line.operands[1], line.no)) ? 1 : 2;
    }
    return 1;
}

class Assembler {
public:
    Assembler(std::string_view source, uint32_t origin)
        : lines_(scan(source)), origin_(origin) {}

    CodeBlob run() {
        collect_symbols();
        emit_all();
        return std::move(blob_);
    }

private:
    void collect_symbols() {
        uint32_t lc = origin_;
        for (const Line& line : lines_) {
            if (!line.label.empty()) {
                if (blob_.symbols.count(line.label))
                    fail(line.no, "duplicate label '" + line.label + "'");
                blob_.symbols[line.label] = lc;
            }
            if (!line.mnemonic.empty()) lc = advance(line, lc);
        }
    }

    uint32_t advance(const Line& line, uint32_t lc) {
        if (line.mnemonic == ".org") {
            if (line.operands.size() != 1) fail(line.no, ".org needs an address");
            int64_t target = need_number(line.operands[0], line.no);
            if (target < lc || target % 4 != 0)
                fail(line.no, ".org must move forward to a word boundary");
            return uint32_t(target);
        }
        if (line.mnemonic == ".word") return lc + 4;
        if (line.mnemonic == ".space") {
            if (line.operands.size() != 1) fail(line.no, ".space needs a size");
            int64_t n = need_number(line.operands[0], line.no);
            if (n < 0 || n % 4 != 0)
                fail(line.no, ".space size must be a nonnegative word multiple");
            return lc + uint32_t(n);
        }
        return lc + 4 * statement_words(line);
    }

    void emit_all() {
        blob_.base = origin_;
        uint32_t lc = origin_;
        for (const Line& line : lines_) {
            if (line.mnemonic.empty()) continue;
            if (line.mnemonic == ".org") {
                uint32_t target =
                    uint32_t(need_number(line.operands[0], line.no));
                while (lc < target) { put(0); lc += 4; }
                continue;
            }
            if (line.mnemonic == ".word") {
                if (line.operands.size() != 1)
                    fail(line.no, ".word needs one value");
                put(value_or_symbol(line.operands[0], line.no));
                lc += 4;
                continue;
            }
            if (line.mnemonic == ".space") {
                int64_t n = need_number(line.operands[0], line.no);
                for (int64_t i = 0; i < n; i += 4) { put(0); lc += 4; }
                continue;
            }
            lc = emit_instr(line, lc);
        }
    }

    uint32_t value_or_symbol(const std::string& s, size_t line_no) {
        if (auto n = parse_number(s)) return uint32_t(*n);
        auto it = blob_.symbols.find(s);
        if (it == blob_.symbols.end())
            fail(line_no, "undefined symbol '" + s + "'");
        return it->second;
    }

    // Branch/jump target: a label resolves to (label - pc); a number is
    // already a pc-relative byte offset.
    int64_t target_offset(const std::string& s, uint32_t pc, size_t line_no) {
        int64_t off;
        if (auto n = parse_number(s)) {
            off = *n;
        } else {
            auto it = blob_.symbols.find(s);
            if (it == blob_.symbols.end())
                fail(line_no, "undefined label '" + s + "'");
            off = int64_t(it->second) - int64_t(pc);
        }
        if (off % 4 != 0)
            fail(line_no, "misaligned branch target offset " +
                              std::to_string(off));
        return off;
    }

    void expect_operands(const Line& line, size_t n) {
        if (line.operands.size() != n)
            fail(line.no, line.mnemonic + " needs " + std::to_string(n) +
                              " operands");
    }

    uint32_t emit_instr(const Line& line, uint32_t pc) {
        // Pseudo-instructions first.
        if (line.mnemonic == "nop") {
            expect_operands(line, 0);
            put(encode_i(0x13, 0, 0, 0, 0));
            return pc + 4;
        }
        if (line.mnemonic == "mv") {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint8_t rs = need_reg(line.operands[1], line.no);
            put(encode_i(0x13, 0, rd, rs, 0));
            return pc + 4;
        }
        if (line.mnemonic == "li") {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            int64_t v64 = need_number(line.operands[1], line.no);
            uint32_t v = uint32_t(v64);
            if (li_is_short(v64)) {
                put(encode_i(0x13, 0, rd, 0, int32_t(v)));
                return pc + 4;
            }
            uint32_t hi = (v + 0x800) >> 12;
            int32_t lo = int32_t(v) - int32_t(hi << 12);
            put(encode_u(0x37, rd, hi & 0xFFFFF));
            put(encode_i(0x13, 0, rd, rd, lo));
            return pc + 8;
        }
        if (line.mnemonic == "j") {
            expect_operands(line, 1);
            int64_t off = target_offset(line.operands[0], pc, line.no);
            check_imm_range(off, -(1 << 20), (1 << 20) - 2, line.no,
                            "jump offset");
            put(encode_j(0x6F, 0, int32_t(off)));
            return pc + 4;
        }

        const Mnemonic* m = find_mnemonic(line.mnemonic);
        if (!m) fail(line.no, "unknown mnemonic '" + line.mnemonic + "'");

        switch (m->shape) {
        case Shape::RType: {
            expect_operands(line, 3);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint8_t rs1 = need_reg(line.operands[1], line.no);
            uint8_t rs2 = need_reg(line.operands[2], line.no);
            put(encode_r(m->opcode, m->funct3, m->funct7, rd, rs1, rs2));
            break;
        }
        case Shape::IAlu: {
            expect_operands(line, 3);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint8_t rs1 = need_reg(line.operands[1], line.no);
            int64_t imm = need_number(line.operands[2], line.no);
            check_imm_range(imm, -2048, 2047, line.no, "immediate");
            put(encode_i(m->opcode, m->funct3, rd, rs1, int32_t(imm)));
            break;
        }
        case Shape::Shift: {
            expect_operands(line, 3);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint8_t rs1 = need_reg(line.operands[1], line.no);
            int64_t shamt = need_number(line.operands[2], line.no);
            check_imm_range(shamt, 0, 31, line.no, "shift amount");
            put(encode_r(m->opcode, m->funct3, m->funct7, rd, rs1,
                         uint8_t(shamt)));
            break;
        }
        case Shape::Load: {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            int64_t imm;
            uint8_t rs1;
            parse_mem_operand(line.operands[1], line.no, imm, rs1);
            check_imm_range(imm, -2048, 2047, line.no, "displacement");
            put(encode_i(m->opcode, m->funct3, rd, rs1, int32_t(imm)));
            break;
        }
        case Shape::Store: {
            expect_operands(line, 2);
            uint8_t rs2 = need_reg(line.operands[0], line.no);
            int64_t imm;
            uint8_t rs1;
            parse_mem_operand(line.operands[1], line.no, imm, rs1);
            check_imm_range(imm, -2048, 2047, line.no, "displacement");
            put(encode_s(m->opcode, m->funct3, rs1, rs2, int32_t(imm)));
            break;
        }
        case Shape::Branch: {
            expect_operands(line, 3);
            uint8_t rs1 = need_reg(line.operands[0], line.no);
            uint8_t rs2 = need_reg(line.operands[1], line.no);
            int64_t off = target_offset(line.operands[2], pc, line.no);
            check_imm_range(off, -4096, 4094, line.no, "branch offset");
            put(encode_b(m->opcode, m->funct3, rs1, rs2, int32_t(off)));
            break;
        }
        case Shape::Jal: {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            int64_t off = target_offset(line.operands[1], pc, line.no);
            check_imm_range(off, -(1 << 20), (1 << 20) - 2, line.no,
                            "jump offset");
            put(encode_j(m->opcode, rd, int32_t(off)));
            break;
        }
        case Shape::Jalr: {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            int64_t imm;
            uint8_t rs1;
            parse_mem_operand(line.operands[1], line.no, imm, rs1);
            check_imm_range(imm, -2048, 2047, line.no, "displacement");
            put(encode_i(m->opcode, 0, rd, rs1, int32_t(imm)));
            break;
        }
        case Shape::Upper: {
            expect_operands(line, 2);
            uint8_t rd = need_reg(line.operands[0], line.no);
            int64_t imm = need_number(line.operands[1], line.no);
            check_imm_range(imm, 0, 0xFFFFF, line.no, "upper immediate");
            put(encode_u(m->opcode, rd, uint32_t(imm)));
            break;
        }
        case Shape::Bare: {
            expect_operands(line, 0);
            if (line.mnemonic == "fence") put(0x0FF0000F);
            else if (line.mnemonic == "ecall") put(0x00000073);
            else if (line.mnemonic == "ebreak") put(0x00100073);
            else if (line.mnemonic == "sret") put(0x10200073);
            else put(0x30200073); // mret
            break;
        }
        case Shape::CsrReg: {
            expect_operands(line, 3);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint16_t csr = need_csr(line.operands[1], line.no);
            uint8_t rs1 = need_reg(line.operands[2], line.no);
            put(encode_i(m->opcode, m->funct3, rd, rs1, int32_t(csr)));
            break;
        }
        case Shape::CsrImm: {
            expect_operands(line, 3);
            uint8_t rd = need_reg(line.operands[0], line.no);
            uint16_t csr = need_csr(line.operands[1], line.no);
            int64_t uimm = need_number(line.operands[2], line.no);
            check_imm_range(uimm, 0, 31, line.no, "CSR immediate");
            put(encode_i(m->opcode, m->funct3, rd, uint8_t(uimm),
                         int32_t(csr)));
            break;
        }
        }
        return pc + 4;
    }

    void put(uint32_t word) { blob_.words.push_back(word); }

    std::vector<Line> lines_;
    uint32_t origin_;
    CodeBlob blob_;
};

} // namespace

CodeBlob assemble(std::string_view source, uint32_t origin) {
    if (origin % 4 != 0)
        throw Error(ErrorKind::Asm, "origin must be word aligned");
    return Assembler(source, origin).run();
}

namespace {

std::string fmt(const char* pattern, ...) {
    char buf[96];
    va_list ap;
    va_start(ap, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, ap);
    va_end(ap);
    return buf;
}

std::string csr_operand(uint16_t addr) {
    if (auto name = csr_name(addr)) return std::string(*name);
    return fmt("0x%x", addr);
}

} // namespace

std::string disassemble(uint32_t word) {
    DecodedInstr d = decode(word);
    const char* name = op_name(d.op);
    switch (d.op) {
    case Op::LUI:
    case Op::AUIPC:
        return fmt("%s %s, 0x%x", name, reg_name(d.rd),
                   uint32_t(d.imm) >> 12);
    case Op::JAL:
        return fmt("%s %s, %d", name, reg_name(d.rd), d.imm);
    case Op::JALR:
        return fmt("%s %s, %d(%s)", name, reg_name(d.rd), d.imm,
                   reg_name(d.rs1));
    case Op::BEQ: case Op::BNE: case Op::BLT:
    case Op::BGE: case Op::BLTU: case Op::BGEU:
        return fmt("%s %s, %s, %d", name, reg_name(d.rs1), reg_name(d.rs2),
                   d.imm);
    case Op::LB: case Op::LH: case Op::LW: case Op::LBU: case Op::LHU:
        return fmt("%s %s, %d(%s)", name, reg_name(d.rd), d.imm,
                   reg_name(d.rs1));
    case Op::SB: case Op::SH: case Op::SW:
        return fmt("%s %s, %d(%s)", name, reg_name(d.rs2), d.imm,
                   reg_name(d.rs1));
    case Op::ADDI: case Op::SLTI: case Op::SLTIU:
    case Op::XORI: case Op::ORI: case Op::ANDI:
        return fmt("%s %s, %s, %d", name, reg_name(d.rd), reg_name(d.rs1),
                   d.imm);
    case Op::SLLI: case Op::SRLI: case Op::SRAI:
        return fmt("%s %s, %s, %d", name, reg_name(d.rd), reg_name(d.rs1),
                   d.imm);
    case Op::ADD: case Op::SUB: case Op::SLL: case Op::SLT: case Op::SLTU:
    case Op::XOR: case Op::SRL: case Op::SRA: case Op::OR: case Op::AND:
        return fmt("%s %s, %s, %s", name, reg_name(d.rd), reg_name(d.rs1),
                   reg_name(d.rs2));
    case Op::FENCE: case Op::ECALL: case Op::EBREAK:
    case Op::SRET: case Op::MRET:
        return name;
    case Op::CSRRW: case Op::CSRRS: case Op::CSRRC:
        return fmt("%s %s, %s, %s", name, reg_name(d.rd),
                   csr_operand(d.csr).c_str(), reg_name(d.rs1));
    case Op::CSRRWI: case Op::CSRRSI: case Op::CSRRCI:
        return fmt("%s %s, %s, %d", name, reg_name(d.rd),
                   csr_operand(d.csr).c_str(), d.imm);
    case Op::ILLEGAL:
        break;
    }
    return fmt(".word 0x%08x", word);
}

std::string hex_listing(const CodeBlob& blob) {
    std::ostringstream out;
    char line[128];
    for (size_t i = 0; i < blob.words.size(); ++i) {
        uint32_t addr = blob.base + uint32_t(4 * i);
        std::snprintf(line, sizeof line, "%08x: %08x  %s\n", addr,
                      blob.words[i], disassemble(blob.words[i]).c_str());
        out << line;
    }
    return out.str();
}

std::vector<uint8_t> to_bytes(const CodeBlob& blob) {
    std::vector<uint8_t> bytes;
    bytes.reserve(blob.words.size() * 4);
    for (uint32_t w : blob.words) {
        bytes.push_back(uint8_t(w));
        bytes.push_back(uint8_t(w >> 8));
        bytes.push_back(uint8_t(w >> 16));
        bytes.push_back(uint8_t(w >> 24));
    }
    return bytes;
}

} // namespace hvsim::asm_kit
