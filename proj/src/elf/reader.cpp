#include "elfql/elf/reader.hpp"

#include "elfql/error.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <map>

namespace elfql::elf {
namespace {

constexpr std::size_t kIdentSize = 16;

class VectorBuffer final : public ByteBuffer {
public:
    explicit VectorBuffer(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
    std::span<const std::uint8_t> bytes() const noexcept override { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class MappedBuffer final : public ByteBuffer {
public:
    MappedBuffer(void *base, std::size_t size) : base_(base), size_(size) {}
    ~MappedBuffer() override {
        if (base_ != nullptr) ::munmap(base_, size_);
    }
    MappedBuffer(const MappedBuffer &) = delete;
    MappedBuffer &operator=(const MappedBuffer &) = delete;

    std::span<const std::uint8_t> bytes() const noexcept override {
        return {static_cast<const std::uint8_t *>(base_), size_};
    }

private:
    void *base_;
    std::size_t size_;
};

class EmptyBuffer final : public ByteBuffer {
public:
    std::span<const std::uint8_t> bytes() const noexcept override { return {}; }
};

[[noreturn]] void malformed(std::string reason) { throw MalformedError(std::move(reason)); }

bool add_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t &out) {
    return __builtin_add_overflow(a, b, &out);
}

bool mul_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t &out) {
    return __builtin_mul_overflow(a, b, &out);
}

/// Bounds-checked, endian-aware view over the file image.
class ByteView {
public:
    ByteView(std::span<const std::uint8_t> data, bool big_endian) : data_(data), big_endian_(big_endian) {}

    std::size_t size() const noexcept { return data_.size(); }

    bool contains(std::uint64_t offset, std::uint64_t length) const noexcept {
        std::uint64_t end = 0;
        return !add_overflows(offset, length, end) && end <= data_.size();
    }

    std::span<const std::uint8_t> slice(std::uint64_t offset, std::uint64_t length, const char *what) const {
        if (!contains(offset, length)) malformed(std::string(what) + " out of file bounds");
        return data_.subspan(static_cast<std::size_t>(offset), static_cast<std::size_t>(length));
    }

    template <typename T>
    T read(std::uint64_t offset) const {
        if (!contains(offset, sizeof(T))) malformed("read past end of file");
        return decode<T>(data_.data() + offset);
    }

    template <typename T>
    T decode(const std::uint8_t *p) const noexcept {
        T v{};
        std::memcpy(&v, p, sizeof(T));
        if constexpr (sizeof(T) > 1) {
            if (big_endian_ != (std::endian::native == std::endian::big)) v = byteswap(v);
        }
        return v;
    }

private:
    template <typename T>
    static T byteswap(T v) noexcept {
        if constexpr (sizeof(T) == 2) return static_cast<T>(__builtin_bswap16(static_cast<std::uint16_t>(v)));
        if constexpr (sizeof(T) == 4) return static_cast<T>(__builtin_bswap32(static_cast<std::uint32_t>(v)));
        if constexpr (sizeof(T) == 8) return static_cast<T>(__builtin_bswap64(static_cast<std::uint64_t>(v)));
        return v;
    }

    std::span<const std::uint8_t> data_;
    bool big_endian_;
};

/// Cursor over one fixed-size record; reads natural-width fields in order.
class RecordReader {
public:
    RecordReader(const ByteView &view, std::uint64_t offset) : view_(view), pos_(offset) {}

    std::uint8_t u8() { return take<std::uint8_t>(); }
    std::uint16_t u16() { return take<std::uint16_t>(); }
    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    /// Elf_Addr / Elf_Off / Elf_Xword: 4 or 8 bytes depending on class.
    std::uint64_t word(bool is64) { return is64 ? u64() : u32(); }

private:
    template <typename T>
    T take() {
        T v = view_.read<T>(pos_);
        pos_ += sizeof(T);
        return v;
    }

    const ByteView &view_;
    std::uint64_t pos_;
};

std::string read_cstring(std::span<const std::uint8_t> table, std::uint64_t offset, const char *what) {
    if (offset >= table.size()) malformed(std::string(what) + ": string offset past table end");
    const auto *begin = table.data() + offset;
    const auto *end = table.data() + table.size();
    const auto *nul = std::find(begin, end, std::uint8_t{0});
    if (nul == end) malformed(std::string(what) + ": unterminated string");
    return std::string(reinterpret_cast<const char *>(begin), static_cast<std::size_t>(nul - begin));
}

struct VersionTables {
    std::map<std::uint16_t, SymbolVersion> by_index;
};

} // namespace

std::shared_ptr<const ByteBuffer> ByteBuffer::from_vector(std::vector<std::uint8_t> bytes) {
    return std::make_shared<VectorBuffer>(std::move(bytes));
}

std::shared_ptr<const ByteBuffer> ByteBuffer::map_file(const std::filesystem::path &path) {
    const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
        const int err = errno;
        ::close(fd);
        throw IoError("cannot stat " + path.string() + ": " + std::strerror(err));
    }
    if (!S_ISREG(st.st_mode)) {
        ::close(fd);
        throw IoError(path.string() + " is not a regular file");
    }
    if (st.st_size == 0) {
        ::close(fd);
        return std::make_shared<EmptyBuffer>();
    }
    void *base = ::mmap(nullptr, static_cast<std::size_t>(st.st_size), PROT_READ, MAP_PRIVATE, fd, 0);
    const int err = errno;
    ::close(fd);
    if (base == MAP_FAILED) throw IoError("cannot map " + path.string() + ": " + std::strerror(err));
    return std::make_shared<MappedBuffer>(base, static_cast<std::size_t>(st.st_size));
}

bool has_elf_magic(std::span<const std::uint8_t> bytes) noexcept {
    return bytes.size() >= 4 && bytes[0] == 0x7f && bytes[1] == 'E' && bytes[2] == 'L' && bytes[3] == 'F';
}

const Section *ElfObject::find_section(std::string_view name) const noexcept {
    for (const auto &s : sections_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

bool ElfObject::operator==(const ElfObject &other) const {
    if (path_ != other.path_ || !(header_ == other.header_) || segments_ != other.segments_ ||
        symtab_ != other.symtab_ || dynsym_ != other.dynsym_ || dynamic_ != other.dynamic_ ||
        symtab_section_ != other.symtab_section_ || dynsym_section_ != other.dynsym_section_ ||
        dynstr_section_ != other.dynstr_section_ || sections_.size() != other.sections_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        const auto &a = sections_[i];
        const auto &b = other.sections_[i];
        if (a.index != b.index || a.name != b.name || a.name_offset != b.name_offset || a.type != b.type ||
            a.flags != b.flags || a.address != b.address || a.offset != b.offset || a.size != b.size ||
            a.link != b.link || a.info != b.info || a.addralign != b.addralign || a.entsize != b.entsize ||
            !std::ranges::equal(a.content, b.content)) {
            return false;
        }
    }
    return true;
}

class ElfParser {
public:
    ElfParser(std::shared_ptr<const ByteBuffer> buffer, std::string path)
        : buffer_(std::move(buffer)), path_(std::move(path)), view_(buffer_->bytes(), false) {}

    ElfObject parse() {
        const auto bytes = buffer_->bytes();
        if (!has_elf_magic(bytes)) throw NotElfError(path_ + ": not an ELF file (bad magic)");
        if (bytes.size() < kIdentSize) malformed("truncated header");

        obj_.buffer_ = buffer_;
        obj_.path_ = path_;
        parse_header();
        parse_section_headers();
        parse_segments();
        parse_symbol_tables();
        parse_dynamic();
        return std::move(obj_);
    }

private:
    bool is64() const noexcept { return obj_.header_.ident.elf_class == ElfClass::Elf64; }

    void parse_header() {
        const auto bytes = buffer_->bytes();
        auto &h = obj_.header_;
        const std::uint8_t cls = bytes[4];
        const std::uint8_t data = bytes[5];
        if (cls != 1 && cls != 2) malformed("invalid ELF class " + std::to_string(cls));
        if (data != 1 && data != 2) malformed("invalid data encoding " + std::to_string(data));
        h.ident.elf_class = static_cast<ElfClass>(cls);
        h.ident.data_encoding = static_cast<DataEncoding>(data);
        h.ident.ei_version = bytes[6];
        h.ident.os_abi = bytes[7];
        h.ident.abi_version = bytes[8];
        view_ = ByteView(bytes, data == 2);

        const std::size_t header_size = is64() ? 64 : 52;
        if (bytes.size() < header_size) malformed("truncated header");

        RecordReader r(view_, kIdentSize);
        h.file_type = static_cast<FileType>(r.u16());
        h.machine = static_cast<Machine>(r.u16());
        h.version = r.u32();
        h.entry_point = r.word(is64());
        h.phoff = r.word(is64());
        h.shoff = r.word(is64());
        h.flags = r.u32();
        h.ehsize = r.u16();
        h.phentsize = r.u16();
        h.phnum = r.u16();
        h.shentsize = r.u16();
        h.shnum = r.u16();
        h.shstrndx = r.u16();
    }

    std::uint64_t section_header_size() const { return is64() ? 64 : 40; }
    std::uint64_t program_header_size() const { return is64() ? 56 : 32; }

    void check_table(std::uint64_t offset, std::uint64_t count, std::uint64_t entsize, const char *what) {
        std::uint64_t total = 0;
        if (mul_overflows(count, entsize, total) || !view_.contains(offset, total)) {
            malformed(std::string("truncated ") + what);
        }
    }

    Section read_section_header(std::uint32_t index) {
        const auto &h = obj_.header_;
        RecordReader r(view_, h.shoff + std::uint64_t{index} * h.shentsize);
        Section s;
        s.index = index;
        s.name_offset = r.u32();
        s.type = static_cast<SectionType>(r.u32());
        s.flags = r.word(is64());
        s.address = r.word(is64());
        s.offset = r.word(is64());
        s.size = r.word(is64());
        s.link = r.u32();
        s.info = r.u32();
        s.addralign = r.word(is64());
        s.entsize = r.word(is64());
        return s;
    }

    void parse_section_headers() {
        auto &h = obj_.header_;
        if (h.shoff == 0) {
            h.shnum = 0;
            if (h.shstrndx != 0) malformed("shstrndx set without section headers");
            return;
        }
        if (h.shentsize < section_header_size()) malformed("section header entry size too small");
        check_table(h.shoff, 1, h.shentsize, "section header table");

        // Extended numbering: real counts live in section 0.
        const Section first = read_section_header(0);
        if (h.shnum == 0) h.shnum = static_cast<std::uint32_t>(first.size);
        if (h.shstrndx == kShnXIndex) h.shstrndx = first.link;
        if (h.phnum == 0xffff && first.info != 0) h.phnum = first.info;

        check_table(h.shoff, h.shnum, h.shentsize, "section header table");
        if (h.shnum != 0 && h.shstrndx >= h.shnum) malformed("shstrndx out of range");

        auto &sections = obj_.sections_;
        sections.reserve(h.shnum);
        for (std::uint32_t i = 0; i < h.shnum; ++i) {
            Section s = read_section_header(i);
            // Section 0's size field carries the extended section count.
            if (i != 0 && s.type != SectionType::NoBits) s.content = view_.slice(s.offset, s.size, "section content");
            sections.push_back(s);
        }
        if (sections.empty()) return;

        if (h.shstrndx == 0) return;
        const auto &names = sections[h.shstrndx];
        if (names.type == SectionType::NoBits) malformed("section name table has no content");
        for (auto &s : sections) {
            if (s.index == 0 && s.name_offset == 0) continue;
            s.name = read_cstring(names.content, s.name_offset, "section name");
        }
    }

    void parse_segments() {
        const auto &h = obj_.header_;
        if (h.phoff == 0 || h.phnum == 0) return;
        if (h.phentsize < program_header_size()) malformed("program header entry size too small");
        check_table(h.phoff, h.phnum, h.phentsize, "program header table");

        obj_.segments_.reserve(h.phnum);
        for (std::uint32_t i = 0; i < h.phnum; ++i) {
            RecordReader r(view_, h.phoff + std::uint64_t{i} * h.phentsize);
            Segment seg;
            seg.index = i;
            seg.type = static_cast<SegmentType>(r.u32());
            if (is64()) {
                seg.flags = r.u32();
                seg.offset = r.u64();
                seg.vaddr = r.u64();
                seg.paddr = r.u64();
                seg.filesz = r.u64();
                seg.memsz = r.u64();
                seg.align = r.u64();
            } else {
                seg.offset = r.u32();
                seg.vaddr = r.u32();
                seg.paddr = r.u32();
                seg.filesz = r.u32();
                seg.memsz = r.u32();
                seg.flags = r.u32();
                seg.align = r.u32();
            }
            if (seg.filesz > seg.memsz) malformed("segment " + std::to_string(i) + " filesz exceeds memsz");
            if (!view_.contains(seg.offset, seg.filesz)) {
                malformed("segment " + std::to_string(i) + " out of file bounds");
            }
            obj_.segments_.push_back(seg);
        }
    }

    const Section &linked_section(const Section &s, const char *what) const {
        if (s.link == 0 || s.link >= obj_.sections_.size()) {
            malformed(std::string(what) + ": invalid sh_link " + std::to_string(s.link));
        }
        return obj_.sections_[s.link];
    }

    void parse_symbol_tables() {
        const Section *symtab_shndx = nullptr;
        for (const auto &s : obj_.sections_) {
            if (s.type == SectionType::SymTabShndx) symtab_shndx = &s;
        }
        for (const auto &s : obj_.sections_) {
            if (s.type == SectionType::SymTab && !obj_.symtab_section_) {
                obj_.symtab_section_ = s.index;
                obj_.symtab_ = read_symbols(s, SymbolTable::SymTab, symtab_shndx);
            } else if (s.type == SectionType::DynSym && !obj_.dynsym_section_) {
                obj_.dynsym_section_ = s.index;
                obj_.dynsym_ = read_symbols(s, SymbolTable::DynSym, nullptr);
            }
        }
        if (!obj_.dynsym_.empty()) attach_versions();
    }

    std::vector<RawSymbol> read_symbols(const Section &table_section, SymbolTable table, const Section *xindex) {
        const std::uint64_t entsize = is64() ? 24 : 16;
        if (table_section.entsize != 0 && table_section.entsize != entsize) {
            malformed(to_string(table) + ": unexpected entry size " + std::to_string(table_section.entsize));
        }
        if (table_section.size % entsize != 0) malformed(to_string(table) + ": size not a multiple of entry size");
        const Section &strings = linked_section(table_section, to_string(table).c_str());
        if (strings.type == SectionType::NoBits) malformed(to_string(table) + ": string table has no content");

        const std::uint64_t count = table_section.size / entsize;
        std::vector<RawSymbol> out;
        out.reserve(static_cast<std::size_t>(count));
        const ByteView content(table_section.content, obj_.header_.ident.data_encoding == DataEncoding::Msb);
        for (std::uint64_t i = 0; i < count; ++i) {
            RecordReader r(content, i * entsize);
            RawSymbol sym;
            sym.table = table;
            sym.index = static_cast<std::uint32_t>(i);
            std::uint8_t info = 0;
            std::uint8_t other = 0;
            std::uint16_t shndx = 0;
            sym.name_offset = r.u32();
            if (is64()) {
                info = r.u8();
                other = r.u8();
                shndx = r.u16();
                sym.value = r.u64();
                sym.size = r.u64();
            } else {
                sym.value = r.u32();
                sym.size = r.u32();
                info = r.u8();
                other = r.u8();
                shndx = r.u16();
            }
            sym.type = static_cast<SymbolType>(info & 0xf);
            sym.binding = static_cast<SymbolBinding>(info >> 4);
            sym.visibility = static_cast<SymbolVisibility>(other & 0x3);
            sym.shndx = shndx;
            if (shndx == kShnXIndex) {
                if (xindex == nullptr || xindex->link != table_section.index) {
                    malformed(to_string(table) + ": SHN_XINDEX without SYMTAB_SHNDX section");
                }
                const ByteView ext(xindex->content, obj_.header_.ident.data_encoding == DataEncoding::Msb);
                sym.shndx = ext.read<std::uint32_t>(i * 4);
            }
            if (sym.shndx != kShnUndef && sym.shndx < kShnLoReserve && sym.shndx >= obj_.sections_.size()) {
                malformed(to_string(table) + ": symbol " + std::to_string(i) + " section index out of range");
            }
            sym.name = sym.name_offset == 0 && strings.content.empty()
                           ? std::string()
                           : read_cstring(strings.content, sym.name_offset, "symbol name");
            out.push_back(std::move(sym));
        }
        return out;
    }

    void attach_versions() {
        const auto versym = find_typed(SectionType::GnuVersym);
        if (!versym) return;
        const VersionTables tables = read_version_tables();
        const ByteView view(versym->content, obj_.header_.ident.data_encoding == DataEncoding::Msb);
        for (auto &sym : obj_.dynsym_) {
            if (!view.contains(std::uint64_t{sym.index} * 2, 2)) malformed(".gnu.version shorter than .dynsym");
            sym.version = lookup_version(tables, view.read<std::uint16_t>(std::uint64_t{sym.index} * 2));
        }
    }

    static std::optional<SymbolVersion> lookup_version(const VersionTables &tables, std::uint16_t raw) {
        const std::uint16_t idx = raw & static_cast<std::uint16_t>(~kVersymHidden);
        if (idx == kVerNdxLocal || idx == kVerNdxGlobal) return std::nullopt;
        const auto it = tables.by_index.find(idx);
        if (it == tables.by_index.end()) malformed("version index " + std::to_string(idx) + " not defined");
        SymbolVersion v = it->second;
        // Only definitions carry default semantics; the hidden bit marks
        // non-default ("sym@VER").
        v.is_default = v.is_default && (raw & kVersymHidden) == 0;
        return v;
    }

    const Section *find_typed(SectionType type) const {
        for (const auto &s : obj_.sections_) {
            if (s.type == type) return &s;
        }
        return nullptr;
    }

    VersionTables read_version_tables() const {
        VersionTables out;
        const bool msb = obj_.header_.ident.data_encoding == DataEncoding::Msb;
        if (const Section *verdef = find_typed(SectionType::GnuVerdef)) {
            const Section &strings = linked_section(*verdef, ".gnu.version_d");
            const ByteView view(verdef->content, msb);
            std::uint64_t pos = 0;
            // sh_info holds the entry count; a zero vd_next also terminates.
            for (std::uint32_t n = 0; n < std::max<std::uint32_t>(verdef->info, 1); ++n) {
                RecordReader r(view, pos);
                r.u16(); // vd_version
                const std::uint16_t flags = r.u16();
                const std::uint16_t ndx = r.u16();
                const std::uint16_t cnt = r.u16();
                r.u32(); // vd_hash
                const std::uint32_t aux = r.u32();
                const std::uint32_t next = r.u32();
                if (cnt > 0) {
                    const std::uint32_t name_off = view.read<std::uint32_t>(pos + aux);
                    SymbolVersion v{read_cstring(strings.content, name_off, "version definition"),
                                    (flags & kVerFlgBase) == 0};
                    out.by_index.emplace(ndx, std::move(v));
                }
                if (next == 0) break;
                pos += next;
            }
        }
        if (const Section *verneed = find_typed(SectionType::GnuVerneed)) {
            const Section &strings = linked_section(*verneed, ".gnu.version_r");
            const ByteView view(verneed->content, msb);
            std::uint64_t pos = 0;
            for (std::uint32_t n = 0; n < std::max<std::uint32_t>(verneed->info, 1); ++n) {
                RecordReader r(view, pos);
                r.u16(); // vn_version
                const std::uint16_t cnt = r.u16();
                r.u32(); // vn_file
                const std::uint32_t aux = r.u32();
                const std::uint32_t next = r.u32();
                std::uint64_t apos = pos + aux;
                for (std::uint16_t k = 0; k < cnt; ++k) {
                    RecordReader ar(view, apos);
                    ar.u32(); // vna_hash
                    ar.u16(); // vna_flags
                    const std::uint16_t other = ar.u16();
                    const std::uint32_t name_off = ar.u32();
                    const std::uint32_t anext = ar.u32();
                    out.by_index.emplace(other,
                                         SymbolVersion{read_cstring(strings.content, name_off, "version need"), false});
                    if (anext == 0) break;
                    apos += anext;
                }
                if (next == 0) break;
                pos += next;
            }
        }
        return out;
    }

    void parse_dynamic() {
        const Section *dynamic = find_typed(SectionType::Dynamic);
        std::span<const std::uint8_t> content;
        if (dynamic != nullptr) {
            content = dynamic->content;
            if (dynamic->link != 0 && dynamic->link < obj_.sections_.size()) obj_.dynstr_section_ = dynamic->link;
        } else {
            for (const auto &seg : obj_.segments_) {
                if (seg.type == SegmentType::Dynamic) content = view_.slice(seg.offset, seg.filesz, "dynamic segment");
            }
        }
        if (!obj_.dynstr_section_) {
            if (const Section *s = obj_.find_section(".dynstr")) obj_.dynstr_section_ = s->index;
        }
        if (content.empty()) return;

        const std::uint64_t entsize = is64() ? 16 : 8;
        const ByteView view(content, obj_.header_.ident.data_encoding == DataEncoding::Msb);
        for (std::uint64_t pos = 0; pos + entsize <= content.size(); pos += entsize) {
            RecordReader r(view, pos);
            DynamicEntry e;
            e.ordinal = static_cast<std::uint32_t>(pos / entsize);
            if (is64()) {
                e.tag = static_cast<DynamicTag>(static_cast<std::int64_t>(r.u64()));
                e.value = r.u64();
            } else {
                e.tag = static_cast<DynamicTag>(static_cast<std::int32_t>(r.u32()));
                e.value = r.u32();
            }
            obj_.dynamic_.push_back(e);
            if (e.tag == DynamicTag::Null) break;
        }
    }

    std::shared_ptr<const ByteBuffer> buffer_;
    std::string path_;
    ByteView view_;
    ElfObject obj_;
};

ElfObject open_elf(std::shared_ptr<const ByteBuffer> buffer, std::string origin_path) {
    return ElfParser(std::move(buffer), std::move(origin_path)).parse();
}

ElfObject open_elf(std::vector<std::uint8_t> bytes, std::string origin_path) {
    return open_elf(ByteBuffer::from_vector(std::move(bytes)), std::move(origin_path));
}

ElfObject open_elf_file(const std::filesystem::path &path) {
    std::error_code ec;
    auto canonical = std::filesystem::canonical(path, ec);
    if (ec) throw IoError("cannot resolve " + path.string() + ": " + ec.message());
    return open_elf(ByteBuffer::map_file(canonical), canonical.string());
}

std::optional<SymbolVersion> resolve_symbol_version(const ElfObject &obj, std::uint32_t sym_index,
                                                    SymbolTable table) {
    if (table != SymbolTable::DynSym) return std::nullopt;
    const auto &syms = obj.symbols(table);
    if (sym_index >= syms.size()) throw MalformedError("symbol index " + std::to_string(sym_index) + " out of range");
    return syms[sym_index].version;
}

namespace {

std::span<const std::uint8_t> dynamic_strings(const ElfObject &obj) {
    const auto idx = obj.dynamic_string_table();
    if (!idx) throw MalformedError("dynamic section without string table");
    return obj.sections()[*idx].content;
}

} // namespace

std::vector<std::string> needed_libraries(const ElfObject &obj) {
    std::vector<std::string> out;
    for (const auto &e : obj.dynamic_entries()) {
        if (e.tag == DynamicTag::Needed) out.push_back(read_cstring(dynamic_strings(obj), e.value, "DT_NEEDED"));
    }
    return out;
}

std::optional<std::string> dynamic_string(const ElfObject &obj, DynamicTag tag) {
    for (const auto &e : obj.dynamic_entries()) {
        if (e.tag == tag) return read_cstring(dynamic_strings(obj), e.value, to_string(tag).c_str());
    }
    return std::nullopt;
}

} // namespace elfql::elf
