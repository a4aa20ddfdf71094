#include "elfql/bench/elf_writer.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace elfql::bench {
namespace {

using elf::ElfClass;
using elf::SectionType;

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return a <= 1 ? v : (v + a - 1) / a * a; }

std::uint32_t elf_hash(std::string_view name) {
    std::uint32_t h = 0;
    for (const unsigned char c : name) {
        h = (h << 4) + c;
        const std::uint32_t g = h & 0xf0000000u;
        if (g != 0) h ^= g >> 24;
        h &= ~g;
    }
    return h;
}

class StringTable {
public:
    StringTable() : bytes_(1, 0) {}

    std::uint32_t add(const std::string &s) {
        if (s.empty()) return 0;
        if (auto it = offsets_.find(s); it != offsets_.end()) return it->second;
        const auto off = static_cast<std::uint32_t>(bytes_.size());
        bytes_.insert(bytes_.end(), s.begin(), s.end());
        bytes_.push_back(0);
        offsets_.emplace(s, off);
        return off;
    }

    const std::vector<std::uint8_t> &bytes() const noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::map<std::string, std::uint32_t> offsets_;
};

class Sink {
public:
    Sink(std::vector<std::uint8_t> &out, bool msb) : out_(out), msb_(msb) {}

    void u8(std::uint64_t v) { out_.push_back(static_cast<std::uint8_t>(v)); }
    void u16(std::uint64_t v) { put(v, 2); }
    void u32(std::uint64_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void word(bool is64, std::uint64_t v) { put(v, is64 ? 8 : 4); }
    void pad_to(std::uint64_t offset) {
        if (out_.size() > offset) throw std::logic_error("elf writer layout overlap");
        out_.resize(static_cast<std::size_t>(offset), 0);
    }
    void bytes(const std::vector<std::uint8_t> &b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::size_t size() const noexcept { return out_.size(); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            const int shift = msb_ ? (n - 1 - i) * 8 : i * 8;
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    std::vector<std::uint8_t> &out_;
    bool msb_;
};

struct SectionOut {
    std::string name;
    SectionType type = SectionType::Null;
    std::uint64_t flags = 0;
    std::uint64_t addralign = 1;
    std::uint64_t entsize = 0;
    std::uint32_t link = 0;
    std::uint32_t info = 0;
    std::uint64_t size = 0; // for NOBITS
    std::vector<std::uint8_t> content;
    std::uint64_t offset = 0;
    std::uint64_t address = 0;
};

SectionOut sec(std::string name, SectionType type, std::uint64_t flags, std::uint64_t addralign,
               std::uint64_t entsize, std::uint32_t link = 0, std::uint32_t info = 0) {
    SectionOut s;
    s.name = std::move(name);
    s.type = type;
    s.flags = flags;
    s.addralign = addralign;
    s.entsize = entsize;
    s.link = link;
    s.info = info;
    return s;
}

std::vector<SymbolSpec> locals_first(const std::vector<SymbolSpec> &in) {
    std::vector<SymbolSpec> out = in;
    std::stable_partition(out.begin(), out.end(),
                          [](const SymbolSpec &s) { return s.binding == elf::SymbolBinding::Local; });
    return out;
}

std::uint32_t first_non_local(const std::vector<SymbolSpec> &syms) {
    std::uint32_t n = 1;
    for (const auto &s : syms) {
        if (s.binding == elf::SymbolBinding::Local) ++n;
    }
    return n;
}

class ImageBuilder {
public:
    explicit ImageBuilder(const ElfImageSpec &spec)
        : spec_(spec), is64_(spec.elf_class == ElfClass::Elf64), msb_(spec.encoding == elf::DataEncoding::Msb) {}

    std::vector<std::uint8_t> build() {
        dynsyms_ = locals_first(spec_.dynamic_symbols);
        statics_ = locals_first(spec_.static_symbols);
        plan_sections();
        layout();
        fill_contents();
        return serialize();
    }

private:
    std::uint64_t sym_entsize() const { return is64_ ? 24 : 16; }
    std::uint64_t dyn_entsize() const { return is64_ ? 16 : 8; }
    std::uint64_t word_align() const { return is64_ ? 8 : 4; }
    std::uint64_t ehdr_size() const { return is64_ ? 64 : 52; }
    std::uint64_t phdr_size() const { return is64_ ? 56 : 32; }
    std::uint64_t shdr_size() const { return is64_ ? 64 : 40; }

    std::uint32_t add_section(SectionOut s) {
        sections_.push_back(std::move(s));
        return static_cast<std::uint32_t>(sections_.size() - 1);
    }

    static std::uint64_t text_bytes(const SymbolSpec &s) { return std::max<std::uint64_t>(s.size, 1); }

    void plan_sections() {
        sections_.push_back(SectionOut{}); // index 0
        const bool dyn = spec_.dynamic;

        auto uses = [&](Placement p) {
            auto has = [&](const std::vector<SymbolSpec> &v) {
                return std::any_of(v.begin(), v.end(), [&](const SymbolSpec &s) { return s.placement == p; });
            };
            return (dyn && has(dynsyms_)) || (spec_.symtab && has(statics_));
        };

        if (dyn) {
            for (const auto &n : spec_.needed) dynstr_.add(n);
            if (spec_.soname) dynstr_.add(*spec_.soname);
            if (spec_.rpath) dynstr_.add(*spec_.rpath);
            if (spec_.runpath) dynstr_.add(*spec_.runpath);
            for (const auto &s : dynsyms_) dynstr_.add(s.name);
            plan_versions();

            dynsym_ = add_section(sec(".dynsym", SectionType::DynSym, elf::kShfAlloc, word_align(), sym_entsize()));
            dynstr_idx_ = add_section(sec(".dynstr", SectionType::StrTab, elf::kShfAlloc, 1, 0));
            sections_[dynsym_].link = dynstr_idx_;
            sections_[dynsym_].info = first_non_local(dynsyms_);
            if (has_versions_) {
                versym_ = add_section(sec(".gnu.version", SectionType::GnuVersym, elf::kShfAlloc, 2, 2, dynsym_));
            }
            if (!verdefs_.empty()) {
                verdef_ = add_section(sec(".gnu.version_d", SectionType::GnuVerdef, elf::kShfAlloc, word_align(), 0,
                                       dynstr_idx_, static_cast<std::uint32_t>(verdefs_.size())));
            }
            if (!verneeds_.empty()) {
                verneed_ = add_section(sec(".gnu.version_r", SectionType::GnuVerneed, elf::kShfAlloc, word_align(), 0,
                                        dynstr_idx_, static_cast<std::uint32_t>(verneeds_.size())));
            }
        }
        text_ = add_section(sec(".text", SectionType::ProgBits, elf::kShfAlloc | elf::kShfExecInstr, 16, 0));
        if (uses(Placement::Data)) {
            data_ = add_section(sec(".data", SectionType::ProgBits, elf::kShfAlloc | elf::kShfWrite, word_align(), 0));
        }
        if (dyn) {
            dynamic_ = add_section(sec(".dynamic", SectionType::Dynamic, elf::kShfAlloc | elf::kShfWrite, word_align(),
                                    dyn_entsize(), dynstr_idx_));
        }
        if (uses(Placement::Bss)) {
            bss_ = add_section(sec(".bss", SectionType::NoBits, elf::kShfAlloc | elf::kShfWrite, word_align(), 0));
        }
        if (spec_.symtab) {
            symtab_ = add_section(sec(".symtab", SectionType::SymTab, 0, word_align(), sym_entsize()));
            strtab_ = add_section(sec(".strtab", SectionType::StrTab, 0, 1, 0));
            sections_[symtab_].link = strtab_;
            sections_[symtab_].info = first_non_local(statics_);
            for (const auto &s : statics_) strtab_strings_.add(s.name);
        }
        shstrtab_ = add_section(sec(".shstrtab", SectionType::StrTab, 0, 1, 0));
        for (auto &s : sections_) shstrtab_strings_.add(s.name);
    }

    void plan_versions() {
        for (const auto &s : dynsyms_) {
            if (s.version.empty()) continue;
            has_versions_ = true;
            if (s.version_file.empty()) {
                if (std::find(verdefs_.begin(), verdefs_.end(), s.version) == verdefs_.end()) {
                    verdefs_.push_back(s.version);
                }
            } else {
                auto it = std::find_if(verneeds_.begin(), verneeds_.end(),
                                       [&](const auto &v) { return v.first == s.version_file; });
                if (it == verneeds_.end()) {
                    verneeds_.push_back({s.version_file, {}});
                    it = verneeds_.end() - 1;
                }
                if (std::find(it->second.begin(), it->second.end(), s.version) == it->second.end()) {
                    it->second.push_back(s.version);
                }
            }
        }
        if (!verdefs_.empty()) {
            // Index 1 is the base definition naming the object itself.
            verdefs_.insert(verdefs_.begin(), spec_.soname.value_or("a.out"));
        }
        std::uint16_t next = static_cast<std::uint16_t>(verdefs_.empty() ? 2 : verdefs_.size() + 1);
        for (std::size_t i = 1; i < verdefs_.size(); ++i) def_index_[verdefs_[i]] = static_cast<std::uint16_t>(i + 1);
        for (const auto &[file, versions] : verneeds_) {
            dynstr_.add(file);
            for (const auto &v : versions) need_index_[{file, v}] = next++;
        }
        for (const auto &v : verdefs_) dynstr_.add(v);
        for (const auto &[file, versions] : verneeds_) {
            for (const auto &v : versions) dynstr_.add(v);
        }
    }

    std::uint64_t content_size(std::uint32_t idx) const {
        if (idx == dynsym_) return (dynsyms_.size() + 1) * sym_entsize();
        if (idx == dynstr_idx_) return dynstr_.bytes().size();
        if (idx == versym_) return (dynsyms_.size() + 1) * 2;
        if (idx == verdef_) return verdefs_.size() * 28;
        if (idx == verneed_) {
            std::uint64_t n = 0;
            for (const auto &[file, versions] : verneeds_) n += 16 + 16 * versions.size();
            return n;
        }
        if (idx == text_ || idx == data_ || idx == bss_) {
            const Placement p = idx == text_ ? Placement::Text : (idx == data_ ? Placement::Data : Placement::Bss);
            std::uint64_t n = 0;
            auto add = [&](const std::vector<SymbolSpec> &v) {
                for (const auto &s : v) {
                    if (s.placement == p) n += p == Placement::Text ? text_bytes(s) : s.size;
                }
            };
            if (spec_.dynamic) add(dynsyms_);
            if (spec_.symtab) add(statics_);
            return n;
        }
        if (idx == dynamic_) return dynamic_entry_count() * dyn_entsize();
        if (idx == symtab_) return (statics_.size() + 1) * sym_entsize();
        if (idx == strtab_) return strtab_strings_.bytes().size();
        if (idx == shstrtab_) return shstrtab_strings_.bytes().size();
        return 0;
    }

    std::size_t dynamic_entry_count() const {
        std::size_t n = spec_.needed.size() + 5; // STRTAB SYMTAB STRSZ SYMENT NULL
        n += spec_.soname ? 1 : 0;
        n += spec_.rpath ? 1 : 0;
        n += spec_.runpath ? 1 : 0;
        n += versym_ ? 1 : 0;
        n += verdef_ ? 2 : 0;
        n += verneed_ ? 2 : 0;
        return n;
    }

    std::uint32_t phnum() const { return spec_.dynamic ? 2 : 1; }

    void layout() {
        std::uint64_t pos = ehdr_size() + phnum() * phdr_size();
        for (std::uint32_t i = 1; i < sections_.size(); ++i) {
            auto &s = sections_[i];
            s.size = content_size(i);
            pos = align_up(pos, s.addralign);
            s.offset = pos;
            if (s.flags & elf::kShfAlloc) s.address = pos;
            if (s.type != SectionType::NoBits) pos += s.size;
        }
        shoff_ = align_up(pos, word_align());
    }

    void write_symbol(Sink &out, std::uint32_t name, std::uint64_t value, std::uint64_t size, std::uint8_t info,
                      std::uint8_t other, std::uint16_t shndx) const {
        out.u32(name);
        if (is64_) {
            out.u8(info);
            out.u8(other);
            out.u16(shndx);
            out.u64(value);
            out.u64(size);
        } else {
            out.u32(value);
            out.u32(size);
            out.u8(info);
            out.u8(other);
            out.u16(shndx);
        }
    }

    /// Assigns addresses inside .text/.data/.bss in table order.
    std::pair<std::uint64_t, std::uint16_t> place(const SymbolSpec &s, std::vector<std::uint8_t> *text) {
        switch (s.placement) {
        case Placement::Text: {
            const std::uint64_t addr = sections_[text_].address + text_cursor_;
            if (text != nullptr) {
                text->push_back(0xc3);
                text->insert(text->end(), static_cast<std::size_t>(text_bytes(s) - 1), 0xcc);
            }
            text_cursor_ += text_bytes(s);
            return {addr, static_cast<std::uint16_t>(text_)};
        }
        case Placement::Data: {
            const std::uint64_t addr = sections_[data_].address + data_cursor_;
            data_cursor_ += s.size;
            return {addr, static_cast<std::uint16_t>(data_)};
        }
        case Placement::Bss: {
            const std::uint64_t addr = sections_[bss_].address + bss_cursor_;
            bss_cursor_ += s.size;
            return {addr, static_cast<std::uint16_t>(bss_)};
        }
        case Placement::Absolute: return {0, static_cast<std::uint16_t>(elf::kShnAbs)};
        case Placement::Undefined: return {0, 0};
        }
        return {0, 0};
    }

    std::vector<std::uint8_t> symbol_table(const std::vector<SymbolSpec> &syms, StringTable &strings,
                                           std::vector<std::uint8_t> &text) {
        std::vector<std::uint8_t> bytes;
        Sink out(bytes, msb_);
        write_symbol(out, 0, 0, 0, 0, 0, 0);
        for (const auto &s : syms) {
            const auto [value, shndx] = place(s, &text);
            const auto info = static_cast<std::uint8_t>((static_cast<unsigned>(s.binding) << 4) |
                                                        (static_cast<unsigned>(s.type) & 0xf));
            write_symbol(out, strings.add(s.name), value, s.size, info, static_cast<std::uint8_t>(s.visibility),
                         shndx);
        }
        return bytes;
    }

    void fill_contents() {
        std::vector<std::uint8_t> text;
        if (spec_.dynamic) {
            sections_[dynsym_].content = symbol_table(dynsyms_, dynstr_, text);
            sections_[dynstr_idx_].content = dynstr_.bytes();
            if (versym_) sections_[versym_].content = versym_bytes();
            if (verdef_) sections_[verdef_].content = verdef_bytes();
            if (verneed_) sections_[verneed_].content = verneed_bytes();
            sections_[dynamic_].content = dynamic_bytes();
        }
        if (spec_.symtab) {
            sections_[symtab_].content = symbol_table(statics_, strtab_strings_, text);
            sections_[strtab_].content = strtab_strings_.bytes();
        }
        sections_[text_].content = std::move(text);
        if (data_) sections_[data_].content.assign(static_cast<std::size_t>(sections_[data_].size), 0);
        sections_[shstrtab_].content = shstrtab_strings_.bytes();
    }

    std::vector<std::uint8_t> versym_bytes() const {
        std::vector<std::uint8_t> bytes;
        Sink out(bytes, msb_);
        out.u16(elf::kVerNdxLocal);
        for (const auto &s : dynsyms_) {
            if (s.binding == elf::SymbolBinding::Local) {
                out.u16(elf::kVerNdxLocal);
            } else if (s.version.empty()) {
                out.u16(elf::kVerNdxGlobal);
            } else if (s.version_file.empty()) {
                out.u16(def_index_.at(s.version) | (s.hidden_version ? elf::kVersymHidden : 0));
            } else {
                out.u16(need_index_.at({s.version_file, s.version}));
            }
        }
        return bytes;
    }

    std::vector<std::uint8_t> verdef_bytes() {
        std::vector<std::uint8_t> bytes;
        Sink out(bytes, msb_);
        for (std::size_t i = 0; i < verdefs_.size(); ++i) {
            out.u16(1);                                     // vd_version
            out.u16(i == 0 ? elf::kVerFlgBase : 0);         // vd_flags
            out.u16(i + 1);                                 // vd_ndx
            out.u16(1);                                     // vd_cnt
            out.u32(elf_hash(verdefs_[i]));                 // vd_hash
            out.u32(20);                                    // vd_aux
            out.u32(i + 1 == verdefs_.size() ? 0 : 28);     // vd_next
            out.u32(dynstr_.add(verdefs_[i]));              // vda_name
            out.u32(0);                                     // vda_next
        }
        return bytes;
    }

    std::vector<std::uint8_t> verneed_bytes() {
        std::vector<std::uint8_t> bytes;
        Sink out(bytes, msb_);
        for (std::size_t i = 0; i < verneeds_.size(); ++i) {
            const auto &[file, versions] = verneeds_[i];
            out.u16(1);
            out.u16(versions.size());
            out.u32(dynstr_.add(file));
            out.u32(16);
            out.u32(i + 1 == verneeds_.size() ? 0 : 16 + 16 * versions.size());
            for (std::size_t k = 0; k < versions.size(); ++k) {
                out.u32(elf_hash(versions[k]));
                out.u16(0);
                out.u16(need_index_.at({file, versions[k]}));
                out.u32(dynstr_.add(versions[k]));
                out.u32(k + 1 == versions.size() ? 0 : 16);
            }
        }
        return bytes;
    }

    std::vector<std::uint8_t> dynamic_bytes() {
        std::vector<std::uint8_t> bytes;
        Sink out(bytes, msb_);
        auto entry = [&](elf::DynamicTag tag, std::uint64_t value) {
            out.word(is64_, static_cast<std::uint64_t>(tag));
            out.word(is64_, value);
        };
        for (const auto &n : spec_.needed) entry(elf::DynamicTag::Needed, dynstr_.add(n));
        if (spec_.soname) entry(elf::DynamicTag::SoName, dynstr_.add(*spec_.soname));
        if (spec_.rpath) entry(elf::DynamicTag::RPath, dynstr_.add(*spec_.rpath));
        if (spec_.runpath) entry(elf::DynamicTag::RunPath, dynstr_.add(*spec_.runpath));
        entry(elf::DynamicTag::StrTab, sections_[dynstr_idx_].address);
        entry(elf::DynamicTag::SymTab, sections_[dynsym_].address);
        entry(elf::DynamicTag::StrSz, sections_[dynstr_idx_].size);
        entry(elf::DynamicTag::SymEnt, sym_entsize());
        if (versym_) entry(elf::DynamicTag::VerSym, sections_[versym_].address);
        if (verdef_) {
            entry(elf::DynamicTag::VerDef, sections_[verdef_].address);
            entry(elf::DynamicTag::VerDefNum, verdefs_.size());
        }
        if (verneed_) {
            entry(elf::DynamicTag::VerNeed, sections_[verneed_].address);
            entry(elf::DynamicTag::VerNeedNum, verneeds_.size());
        }
        entry(elf::DynamicTag::Null, 0);
        return bytes;
    }

    std::vector<std::uint8_t> serialize() {
        std::vector<std::uint8_t> bytes;
        bytes.reserve(static_cast<std::size_t>(shoff_ + sections_.size() * shdr_size()));
        Sink out(bytes, msb_);

        // ELF header
        out.u8(0x7f);
        out.u8('E');
        out.u8('L');
        out.u8('F');
        out.u8(static_cast<std::uint8_t>(spec_.elf_class));
        out.u8(static_cast<std::uint8_t>(spec_.encoding));
        out.u8(1); // EV_CURRENT
        out.u8(0); // SYSV
        out.pad_to(16);
        out.u16(static_cast<std::uint16_t>(spec_.file_type));
        out.u16(static_cast<std::uint16_t>(spec_.machine));
        out.u32(1);
        out.word(is64_, sections_[text_].address);
        out.word(is64_, ehdr_size());
        out.word(is64_, shoff_);
        out.u32(0);
        out.u16(ehdr_size());
        out.u16(phdr_size());
        out.u16(phnum());
        out.u16(shdr_size());
        out.u16(sections_.size());
        out.u16(shstrtab_);

        const std::uint64_t file_end = shoff_ + sections_.size() * shdr_size();
        std::uint64_t mem_end = file_end;
        if (bss_) mem_end = std::max(mem_end, sections_[bss_].address + sections_[bss_].size);
        write_phdr(out, elf::SegmentType::Load, elf::kPfR | elf::kPfW | elf::kPfX, 0, 0, file_end, mem_end, 0x1000);
        if (spec_.dynamic) {
            const auto &d = sections_[dynamic_];
            write_phdr(out, elf::SegmentType::Dynamic, elf::kPfR | elf::kPfW, d.offset, d.address, d.size, d.size,
                       word_align());
        }

        for (std::uint32_t i = 1; i < sections_.size(); ++i) {
            const auto &s = sections_[i];
            if (s.type == SectionType::NoBits) continue;
            if (s.content.size() != s.size) throw std::logic_error("elf writer size mismatch in " + s.name);
            out.pad_to(s.offset);
            out.bytes(s.content);
        }
        out.pad_to(shoff_);
        for (const auto &s : sections_) {
            out.u32(shstrtab_strings_.add(s.name));
            out.u32(static_cast<std::uint32_t>(s.type));
            out.word(is64_, s.flags);
            out.word(is64_, s.address);
            out.word(is64_, s.offset);
            out.word(is64_, s.size);
            out.u32(s.link);
            out.u32(s.info);
            out.word(is64_, s.addralign);
            out.word(is64_, s.entsize);
        }
        return bytes;
    }

    void write_phdr(Sink &out, elf::SegmentType type, std::uint32_t flags, std::uint64_t offset, std::uint64_t addr,
                    std::uint64_t filesz, std::uint64_t memsz, std::uint64_t align) const {
        out.u32(static_cast<std::uint32_t>(type));
        if (is64_) {
            out.u32(flags);
            out.u64(offset);
            out.u64(addr);
            out.u64(addr);
            out.u64(filesz);
            out.u64(memsz);
            out.u64(align);
        } else {
            out.u32(offset);
            out.u32(addr);
            out.u32(addr);
            out.u32(filesz);
            out.u32(memsz);
            out.u32(flags);
            out.u32(align);
        }
    }

    const ElfImageSpec &spec_;
    bool is64_;
    bool msb_;
    std::vector<SymbolSpec> dynsyms_;
    std::vector<SymbolSpec> statics_;
    std::vector<SectionOut> sections_;
    StringTable dynstr_;
    StringTable strtab_strings_;
    StringTable shstrtab_strings_;

    bool has_versions_ = false;
    std::vector<std::string> verdefs_;
    std::vector<std::pair<std::string, std::vector<std::string>>> verneeds_;
    std::map<std::string, std::uint16_t> def_index_;
    std::map<std::pair<std::string, std::string>, std::uint16_t> need_index_;

    std::uint32_t dynsym_ = 0, dynstr_idx_ = 0, versym_ = 0, verdef_ = 0, verneed_ = 0;
    std::uint32_t text_ = 0, data_ = 0, bss_ = 0, dynamic_ = 0, symtab_ = 0, strtab_ = 0, shstrtab_ = 0;
    std::uint64_t shoff_ = 0;
    std::uint64_t text_cursor_ = 0, data_cursor_ = 0, bss_cursor_ = 0;
};

} // namespace

std::vector<std::uint8_t> build_elf(const ElfImageSpec &spec) { return ImageBuilder(spec).build(); }

} // namespace elfql::bench
