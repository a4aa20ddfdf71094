#include "elfql/model/disasm.hpp"

#include <array>
#include <cstdio>

namespace elfql::model {
namespace {

constexpr std::array<const char *, 16> kReg64 = {"rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
                                                 "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
constexpr std::array<const char *, 16> kReg32 = {"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi",
                                                 "r8d", "r9d", "r10d", "r11d", "r12d", "r13d", "r14d", "r15d"};
constexpr std::array<const char *, 16> kReg16 = {"ax",  "cx",  "dx",   "bx",   "sp",   "bp",   "si",   "di",
                                                 "r8w", "r9w", "r10w", "r11w", "r12w", "r13w", "r14w", "r15w"};
constexpr std::array<const char *, 16> kReg8Rex = {"al",  "cl",  "dl",   "bl",   "spl",  "bpl",  "sil",  "dil",
                                                   "r8b", "r9b", "r10b", "r11b", "r12b", "r13b", "r14b", "r15b"};
constexpr std::array<const char *, 8> kReg8Legacy = {"al", "cl", "dl", "bl", "ah", "ch", "dh", "bh"};

constexpr std::array<const char *, 8> kAluOps = {"add", "or", "adc", "sbb", "and", "sub", "xor", "cmp"};
constexpr std::array<const char *, 8> kShiftOps = {"rol", "ror", "rcl", "rcr", "shl", "shr", "sal", "sar"};
constexpr std::array<const char *, 16> kConditions = {"o", "no", "b",  "ae", "e", "ne", "be", "a",
                                                      "s", "ns", "p",  "np", "l", "ge", "le", "g"};

std::string hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t mask(int width) { return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1; }

const char *ptr_name(int width) {
    switch (width) {
    case 8: return "BYTE PTR ";
    case 16: return "WORD PTR ";
    case 32: return "DWORD PTR ";
    case 64: return "QWORD PTR ";
    default: return "";
    }
}

struct ModRm {
    std::uint8_t mod = 0;
    std::uint8_t reg = 0; // includes REX.R
    std::uint8_t rm = 0;  // includes REX.B when mod == 3
    std::string memory;   // formatted address when mod != 3

    bool is_register() const noexcept { return mod == 3; }
};

class X86Instruction {
public:
    X86Instruction(std::span<const std::uint8_t> bytes, std::uint64_t address) : bytes_(bytes), address_(address) {}

    std::optional<DecodedInstruction> run() {
        if (!read_prefixes()) return std::nullopt;
        auto op = next();
        if (!op) return std::nullopt;
        const bool ok = *op == 0x0f ? two_byte() : one_byte(*op);
        if (!ok) return std::nullopt;
        // Prefixes that do not change the operands are printed as words
        // before the mnemonic, as objdump does.
        std::string words;
        for (int i = 1; i < opsize_count_; ++i) words += "data16 ";
        if (!null_segment_.empty()) words += null_segment_ + " ";
        return DecodedInstruction{pos_, words + mnemonic_, std::move(operands_)};
    }

private:
    std::optional<std::uint8_t> next() {
        if (pos_ >= bytes_.size()) return std::nullopt;
        return bytes_[pos_++];
    }

    template <typename T>
    std::optional<T> next_le() {
        if (pos_ + sizeof(T) > bytes_.size()) return std::nullopt;
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    bool read_prefixes() {
        while (pos_ < bytes_.size()) {
            const std::uint8_t b = bytes_[pos_];
            if (b == 0x66) {
                opsize_ = true;
                ++opsize_count_;
            } else if (b == 0xf3) {
                rep_ = true;
            } else if (b == 0xf2) {
                repne_ = true;
            } else if (b == 0x2e) {
                null_segment_ = "cs";
            } else if (b == 0x3e) {
                null_segment_ = "ds";
            } else if (b == 0x26) {
                null_segment_ = "es";
            } else if (b == 0x36) {
                null_segment_ = "ss";
            } else if (b == 0x64) {
                segment_ = "fs:";
            } else if (b == 0x65) {
                segment_ = "gs:";
            } else {
                break;
            }
            ++pos_;
            if (pos_ > 14) return false;
        }
        if (pos_ < bytes_.size() && (bytes_[pos_] & 0xf0) == 0x40) rex_ = bytes_[pos_++];
        return true;
    }

    bool rex_w() const noexcept { return (rex_ & 0x8) != 0; }
    std::uint8_t rex_r() const noexcept { return (rex_ & 0x4) ? 8 : 0; }
    std::uint8_t rex_x() const noexcept { return (rex_ & 0x2) ? 8 : 0; }
    std::uint8_t rex_b() const noexcept { return (rex_ & 0x1) ? 8 : 0; }

    int operand_width() const noexcept { return rex_w() ? 64 : (opsize_ ? 16 : 32); }
    int stack_width() const noexcept { return opsize_ ? 16 : 64; }

    const char *reg(int width, unsigned index) const noexcept {
        switch (width) {
        case 8: return rex_ != 0 ? kReg8Rex[index] : (index < 8 ? kReg8Legacy[index] : kReg8Rex[index]);
        case 16: return kReg16[index];
        case 32: return kReg32[index];
        default: return kReg64[index];
        }
    }

    std::optional<ModRm> modrm() {
        auto b = next();
        if (!b) return std::nullopt;
        ModRm m;
        m.mod = *b >> 6;
        m.reg = static_cast<std::uint8_t>(((*b >> 3) & 7) | rex_r());
        const std::uint8_t rm = *b & 7;
        if (m.mod == 3) {
            m.rm = static_cast<std::uint8_t>(rm | rex_b());
            return m;
        }

        std::string base;
        std::string index;
        bool rip = false;
        bool disp32 = m.mod == 2;
        if (rm == 4) {
            auto sib = next();
            if (!sib) return std::nullopt;
            const unsigned scale = 1u << (*sib >> 6);
            const unsigned idx = ((*sib >> 3) & 7) | rex_x();
            const unsigned sib_base = *sib & 7;
            if (idx != 4) index = std::string(kReg64[idx]) + "*" + std::to_string(scale);
            if (sib_base == 5 && m.mod == 0) {
                disp32 = true;
            } else {
                base = kReg64[sib_base | rex_b()];
            }
        } else if (rm == 5 && m.mod == 0) {
            rip = true;
            disp32 = true;
        } else {
            base = kReg64[rm | rex_b()];
        }

        std::int64_t disp = 0;
        bool has_disp = false;
        if (m.mod == 1) {
            auto d = next_le<std::int8_t>();
            if (!d) return std::nullopt;
            disp = *d;
            has_disp = true;
        } else if (disp32) {
            auto d = next_le<std::int32_t>();
            if (!d) return std::nullopt;
            disp = *d;
            has_disp = true;
        }

        if (base.empty() && index.empty() && !rip) {
            // Absolute address: no brackets, always with a segment.
            m.memory = (segment_.empty() ? std::string("ds:") : segment_) + hex(static_cast<std::uint32_t>(disp));
            return m;
        }
        std::string text = "[";
        if (rip) {
            // objdump prints RIP displacements as unsigned 64-bit values.
            text += "rip+" + hex(static_cast<std::uint64_t>(disp));
        } else {
            text += base;
            if (!index.empty()) text += (text.size() > 1 ? "+" : "") + index;
            if (has_disp) {
                text += disp < 0 ? "-" + hex(static_cast<std::uint64_t>(-disp))
                                 : "+" + hex(static_cast<std::uint64_t>(disp));
            }
        }
        text += "]";
        m.memory = segment_ + text;
        return m;
    }

    std::string rm_operand(const ModRm &m, int width) const {
        if (m.is_register()) return reg(width, m.rm);
        return ptr_name(width) + m.memory;
    }

    std::optional<std::uint64_t> immediate(int width) {
        switch (width) {
        case 8: return next_le<std::uint8_t>();
        case 16: return next_le<std::uint16_t>();
        default: return next_le<std::uint32_t>();
        }
    }

    /// Immediate sign-extended to the operand width.
    std::optional<std::string> signed_immediate(int imm_width, int op_width) {
        std::optional<std::int64_t> v;
        if (imm_width == 8) {
            if (auto i = next_le<std::int8_t>()) v = *i;
        } else if (imm_width == 16) {
            if (auto i = next_le<std::int16_t>()) v = *i;
        } else {
            if (auto i = next_le<std::int32_t>()) v = *i;
        }
        if (!v) return std::nullopt;
        return hex(static_cast<std::uint64_t>(*v) & mask(op_width));
    }

    bool relative(const char *mnemonic, int width) {
        std::optional<std::int64_t> disp;
        if (width == 8) {
            if (auto d = next_le<std::int8_t>()) disp = *d;
        } else {
            if (auto d = next_le<std::int32_t>()) disp = *d;
        }
        if (!disp) return false;
        mnemonic_ = mnemonic;
        // Bare hex, like objdump's branch targets.
        operands_ = hex(address_ + pos_ + static_cast<std::uint64_t>(*disp)).substr(2);
        return true;
    }

    bool set(std::string mnemonic, std::string operands = {}) {
        mnemonic_ = std::move(mnemonic);
        operands_ = std::move(operands);
        return true;
    }

    bool one_byte(std::uint8_t op) {
        const int width = operand_width();

        if (op < 0x40 && (op & 7) < 6) {
            const char *name = kAluOps[op >> 3];
            switch (op & 7) {
            case 0:
            case 1:
            case 2:
            case 3: {
                const int w = (op & 1) ? width : 8;
                auto m = modrm();
                if (!m) return false;
                if (op & 2) return set(name, std::string(reg(w, m->reg)) + "," + rm_operand(*m, w));
                return set(name, rm_operand(*m, w) + "," + reg(w, m->reg));
            }
            case 4: {
                auto imm = immediate(8);
                if (!imm) return false;
                return set(name, "al," + hex(*imm));
            }
            case 5: {
                auto imm = signed_immediate(width == 16 ? 16 : 32, width);
                if (!imm) return false;
                return set(name, std::string(reg(width, 0)) + "," + *imm);
            }
            }
        }
        if (op >= 0x50 && op <= 0x57) return set("push", reg(stack_width(), (op & 7) | rex_b()));
        if (op >= 0x58 && op <= 0x5f) return set("pop", reg(stack_width(), (op & 7) | rex_b()));
        if (op >= 0x70 && op <= 0x7f) return relative((std::string("j") + kConditions[op & 0xf]).c_str(), 8);
        if (op >= 0xb0 && op <= 0xb7) {
            auto imm = immediate(8);
            if (!imm) return false;
            return set("mov", std::string(reg(8, (op & 7) | rex_b())) + "," + hex(*imm));
        }
        if (op >= 0xb8 && op <= 0xbf) {
            const unsigned r = (op & 7) | rex_b();
            if (rex_w()) {
                auto imm = next_le<std::uint64_t>();
                if (!imm) return false;
                return set("movabs", std::string(reg(64, r)) + "," + hex(*imm));
            }
            auto imm = immediate(width);
            if (!imm) return false;
            return set("mov", std::string(reg(width, r)) + "," + hex(*imm));
        }

        switch (op) {
        case 0x63: {
            auto m = modrm();
            if (!m) return false;
            return set("movsxd", std::string(reg(width, m->reg)) + "," + rm_operand(*m, 32));
        }
        case 0x68: {
            auto imm = signed_immediate(32, 64);
            if (!imm) return false;
            return set("push", *imm);
        }
        case 0x6a: {
            auto imm = signed_immediate(8, 64);
            if (!imm) return false;
            return set("push", *imm);
        }
        case 0x69:
        case 0x6b: {
            auto m = modrm();
            if (!m) return false;
            auto imm = signed_immediate(op == 0x6b ? 8 : (width == 16 ? 16 : 32), width);
            if (!imm) return false;
            return set("imul", std::string(reg(width, m->reg)) + "," + rm_operand(*m, width) + "," + *imm);
        }
        case 0x80:
        case 0x81:
        case 0x83: {
            const int w = op == 0x80 ? 8 : width;
            auto m = modrm();
            if (!m) return false;
            auto imm = signed_immediate(op == 0x81 ? (w == 16 ? 16 : 32) : 8, w);
            if (!imm) return false;
            return set(kAluOps[m->reg & 7], rm_operand(*m, w) + "," + *imm);
        }
        case 0x84:
        case 0x85:
        case 0x86:
        case 0x87: {
            const int w = (op & 1) ? width : 8;
            auto m = modrm();
            if (!m) return false;
            return set(op < 0x86 ? "test" : "xchg", rm_operand(*m, w) + "," + reg(w, m->reg));
        }
        case 0x88:
        case 0x89:
        case 0x8a:
        case 0x8b: {
            const int w = (op & 1) ? width : 8;
            auto m = modrm();
            if (!m) return false;
            if (op & 2) return set("mov", std::string(reg(w, m->reg)) + "," + rm_operand(*m, w));
            return set("mov", rm_operand(*m, w) + "," + reg(w, m->reg));
        }
        case 0x8d: {
            auto m = modrm();
            if (!m || m->is_register()) return false;
            return set("lea", std::string(reg(width, m->reg)) + "," + m->memory);
        }
        case 0x90:
            if (rex_b()) return set("xchg", std::string(reg(width, 8)) + "," + reg(width, 0));
            if (opsize_) {
                --opsize_count_;
                return set("xchg", "ax,ax");
            }
            return set(rep_ ? "pause" : "nop");
        case 0x98: return set(rex_w() ? "cdqe" : (opsize_ ? "cbw" : "cwde"));
        case 0x99: return set(rex_w() ? "cqo" : (opsize_ ? "cwd" : "cdq"));
        case 0xa8: {
            auto imm = immediate(8);
            if (!imm) return false;
            return set("test", "al," + hex(*imm));
        }
        case 0xa9: {
            auto imm = signed_immediate(width == 16 ? 16 : 32, width);
            if (!imm) return false;
            return set("test", std::string(reg(width, 0)) + "," + *imm);
        }
        case 0xc0:
        case 0xc1:
        case 0xd0:
        case 0xd1:
        case 0xd2:
        case 0xd3: {
            const int w = (op & 1) ? width : 8;
            auto m = modrm();
            if (!m) return false;
            std::string count;
            if (op <= 0xc1) {
                auto imm = immediate(8);
                if (!imm) return false;
                count = hex(*imm);
            } else {
                count = op <= 0xd1 ? "1" : "cl";
            }
            return set(kShiftOps[m->reg & 7], rm_operand(*m, w) + "," + count);
        }
        case 0xc2: {
            auto imm = immediate(16);
            if (!imm) return false;
            return set("ret", hex(*imm));
        }
        case 0xc3: return set(rep_ ? "repz ret" : "ret");
        case 0xc6:
        case 0xc7: {
            const int w = op == 0xc6 ? 8 : width;
            auto m = modrm();
            if (!m || (m->reg & 7) != 0) return false;
            auto imm = signed_immediate(w == 8 ? 8 : (w == 16 ? 16 : 32), w);
            if (!imm) return false;
            return set("mov", rm_operand(*m, w) + "," + *imm);
        }
        case 0xc9: return set("leave");
        case 0xcc: return set("int3");
        case 0xe8: return relative("call", 32);
        case 0xe9: return relative("jmp", 32);
        case 0xeb: return relative("jmp", 8);
        case 0xf4: return set("hlt");
        case 0xf6:
        case 0xf7: {
            const int w = op == 0xf6 ? 8 : width;
            auto m = modrm();
            if (!m) return false;
            static constexpr std::array<const char *, 8> kGroup3 = {"test", "test", "not", "neg",
                                                                    "mul",  "imul", "div", "idiv"};
            const unsigned sub = m->reg & 7;
            if (sub < 2) {
                auto imm = signed_immediate(w == 8 ? 8 : (w == 16 ? 16 : 32), w);
                if (!imm) return false;
                return set("test", rm_operand(*m, w) + "," + *imm);
            }
            return set(kGroup3[sub], rm_operand(*m, w));
        }
        case 0xfe: {
            auto m = modrm();
            if (!m || (m->reg & 7) > 1) return false;
            return set((m->reg & 7) == 0 ? "inc" : "dec", rm_operand(*m, 8));
        }
        case 0xff: {
            auto m = modrm();
            if (!m) return false;
            switch (m->reg & 7) {
            case 0: return set("inc", rm_operand(*m, width));
            case 1: return set("dec", rm_operand(*m, width));
            case 2:
            case 4:
                if (null_segment_ == "ds") null_segment_ = "notrack";
                return set((m->reg & 7) == 2 ? "call" : "jmp", rm_operand(*m, 64));
            case 6: return set("push", rm_operand(*m, 64));
            default: return false;
            }
        }
        default: return false;
        }
    }

    bool two_byte() {
        auto op = next();
        if (!op) return false;
        const int width = operand_width();

        if (*op >= 0x40 && *op <= 0x4f) {
            auto m = modrm();
            if (!m) return false;
            return set(std::string("cmov") + kConditions[*op & 0xf],
                       std::string(reg(width, m->reg)) + "," + rm_operand(*m, width));
        }
        if (*op >= 0x80 && *op <= 0x8f) return relative((std::string("j") + kConditions[*op & 0xf]).c_str(), 32);
        if (*op >= 0x90 && *op <= 0x9f) {
            auto m = modrm();
            if (!m) return false;
            return set(std::string("set") + kConditions[*op & 0xf], rm_operand(*m, 8));
        }

        switch (*op) {
        case 0x05: return set("syscall");
        case 0x0b: return set("ud2");
        case 0xa2: return set("cpuid");
        case 0x1e:
            if (rep_ && pos_ < bytes_.size() && bytes_[pos_] == 0xfa) {
                ++pos_;
                return set("endbr64");
            }
            return false;
        case 0x1f: {
            auto m = modrm();
            if (!m || (m->reg & 7) != 0) return false;
            return set("nop", rm_operand(*m, width));
        }
        case 0xaf: {
            auto m = modrm();
            if (!m) return false;
            return set("imul", std::string(reg(width, m->reg)) + "," + rm_operand(*m, width));
        }
        case 0xb6:
        case 0xb7:
        case 0xbe:
        case 0xbf: {
            auto m = modrm();
            if (!m) return false;
            const int src = (*op & 1) ? 16 : 8;
            return set(*op < 0xb8 ? "movzx" : "movsx", std::string(reg(width, m->reg)) + "," + rm_operand(*m, src));
        }
        default: return false;
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::uint64_t address_;
    std::size_t pos_ = 0;
    bool opsize_ = false;
    int opsize_count_ = 0;
    std::string null_segment_;
    bool rep_ = false;
    bool repne_ = false;
    std::string segment_;
    std::uint8_t rex_ = 0;
    std::string mnemonic_;
    std::string operands_;
};

class X86_64Decoder final : public InstructionDecoder {
public:
    bool supports(elf::Machine machine) const override { return machine == elf::Machine::X86_64; }

    std::optional<DecodedInstruction> decode(std::span<const std::uint8_t> bytes,
                                             std::uint64_t address) const override {
        return X86Instruction(bytes.first(std::min<std::size_t>(bytes.size(), 15)), address).run();
    }
};

class NullDecoder final : public InstructionDecoder {
public:
    bool supports(elf::Machine) const override { return false; }
    std::optional<DecodedInstruction> decode(std::span<const std::uint8_t>, std::uint64_t) const override {
        return std::nullopt;
    }
};

} // namespace

const InstructionDecoder &x86_64_decoder() {
    static const X86_64Decoder instance;
    return instance;
}

const InstructionDecoder &null_decoder() {
    static const NullDecoder instance;
    return instance;
}

} // namespace elfql::model
