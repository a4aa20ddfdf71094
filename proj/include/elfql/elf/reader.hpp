#pragma once

#include "elfql/elf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elfql::elf {

/// Immutable backing storage for a parsed file. Either an owned byte vector or
/// a read-only memory mapping.
class ByteBuffer {
public:
    virtual ~ByteBuffer() = default;
    virtual std::span<const std::uint8_t> bytes() const noexcept = 0;

    static std::shared_ptr<const ByteBuffer> from_vector(std::vector<std::uint8_t> bytes);
    /// Maps `path` read-only. Throws IoError.
    static std::shared_ptr<const ByteBuffer> map_file(const std::filesystem::path &path);
};

struct ElfIdent {
    ElfClass elf_class = ElfClass::Elf64;
    DataEncoding data_encoding = DataEncoding::Lsb;
    std::uint8_t ei_version = 0;
    std::uint8_t os_abi = 0;
    std::uint8_t abi_version = 0;

    bool operator==(const ElfIdent &) const = default;
};

struct ElfHeader {
    ElfIdent ident;
    FileType file_type = FileType::None;
    Machine machine = Machine::None;
    std::uint32_t version = 0;
    std::uint64_t entry_point = 0;
    std::uint64_t phoff = 0;
    std::uint64_t shoff = 0;
    std::uint32_t flags = 0;
    std::uint16_t ehsize = 0;
    std::uint16_t phentsize = 0;
    std::uint16_t shentsize = 0;
    // Widened: extended numbering stores the real counts in section 0.
    std::uint32_t phnum = 0;
    std::uint32_t shnum = 0;
    std::uint32_t shstrndx = 0;

    bool operator==(const ElfHeader &) const = default;
};

struct Section {
    std::uint32_t index = 0;
    std::string name;
    std::uint32_t name_offset = 0;
    SectionType type = SectionType::Null;
    std::uint64_t flags = 0;
    std::uint64_t address = 0;
    std::uint64_t offset = 0;
    std::uint64_t size = 0;
    std::uint32_t link = 0;
    std::uint32_t info = 0;
    std::uint64_t addralign = 0;
    std::uint64_t entsize = 0;
    /// File bytes of the section; empty for SHT_NOBITS.
    std::span<const std::uint8_t> content;

    bool is_executable() const noexcept { return (flags & kShfExecInstr) != 0; }
};

struct Segment {
    std::uint32_t index = 0;
    SegmentType type = SegmentType::Null;
    std::uint32_t flags = 0;
    std::uint64_t offset = 0;
    std::uint64_t vaddr = 0;
    std::uint64_t paddr = 0;
    std::uint64_t filesz = 0;
    std::uint64_t memsz = 0;
    std::uint64_t align = 0;

    bool operator==(const Segment &) const = default;
};

struct SymbolVersion {
    std::string name;
    /// True for a defined default version ("sym@@VER"); always false for
    /// versions required from another object.
    bool is_default = false;

    bool operator==(const SymbolVersion &) const = default;
};

struct RawSymbol {
    SymbolTable table = SymbolTable::SymTab;
    std::uint32_t index = 0;
    std::uint32_t name_offset = 0;
    std::string name;
    std::uint64_t value = 0;
    std::uint64_t size = 0;
    SymbolType type = SymbolType::NoType;
    SymbolBinding binding = SymbolBinding::Local;
    SymbolVisibility visibility = SymbolVisibility::Default;
    /// Section index after SHN_XINDEX resolution, or a reserved index.
    std::uint32_t shndx = kShnUndef;
    std::optional<SymbolVersion> version;

    bool operator==(const RawSymbol &) const = default;
};

struct DynamicEntry {
    std::uint32_t ordinal = 0;
    DynamicTag tag = DynamicTag::Null;
    std::uint64_t value = 0;

    std::string tag_name() const { return to_string(tag); }
    bool operator==(const DynamicEntry &) const = default;
};

/// A fully parsed ELF file. Immutable after construction; copies share the
/// underlying byte buffer.
class ElfObject {
public:
    const std::string &path() const noexcept { return path_; }
    const ElfHeader &header() const noexcept { return header_; }
    const std::vector<Section> &sections() const noexcept { return sections_; }
    const std::vector<Segment> &segments() const noexcept { return segments_; }
    /// Symbols of one table in index order, the null symbol included. Empty
    /// when the table is absent.
    const std::vector<RawSymbol> &symbols(SymbolTable table) const noexcept {
        return table == SymbolTable::DynSym ? dynsym_ : symtab_;
    }
    bool has_symbol_table(SymbolTable table) const noexcept {
        return table == SymbolTable::DynSym ? dynsym_section_.has_value() : symtab_section_.has_value();
    }
    /// Index of the section backing `table`, if present.
    std::optional<std::uint32_t> symbol_table_section(SymbolTable table) const noexcept {
        return table == SymbolTable::DynSym ? dynsym_section_ : symtab_section_;
    }
    /// Entries of .dynamic up to and including the first DT_NULL.
    const std::vector<DynamicEntry> &dynamic_entries() const noexcept { return dynamic_; }
    /// String table the dynamic section refers to, usually ".dynstr".
    std::optional<std::uint32_t> dynamic_string_table() const noexcept { return dynstr_section_; }

    const Section *find_section(std::string_view name) const noexcept;
    std::span<const std::uint8_t> file_bytes() const noexcept { return buffer_->bytes(); }

    bool operator==(const ElfObject &other) const;

private:
    friend class ElfParser;

    std::shared_ptr<const ByteBuffer> buffer_;
    std::string path_;
    ElfHeader header_;
    std::vector<Section> sections_;
    std::vector<Segment> segments_;
    std::vector<RawSymbol> symtab_;
    std::vector<RawSymbol> dynsym_;
    std::optional<std::uint32_t> symtab_section_;
    std::optional<std::uint32_t> dynsym_section_;
    std::vector<DynamicEntry> dynamic_;
    std::optional<std::uint32_t> dynstr_section_;
};

/// Parses a complete ELF image. `origin_path` becomes the object's path key.
/// Throws NotElfError or MalformedError.
ElfObject open_elf(std::vector<std::uint8_t> bytes, std::string origin_path);
ElfObject open_elf(std::shared_ptr<const ByteBuffer> buffer, std::string origin_path);
/// Maps and parses a file, keyed by its canonical absolute path.
ElfObject open_elf_file(const std::filesystem::path &path);

/// True when `bytes` starts with the ELF magic.
bool has_elf_magic(std::span<const std::uint8_t> bytes) noexcept;

std::optional<SymbolVersion> resolve_symbol_version(const ElfObject &obj, std::uint32_t sym_index,
                                                    SymbolTable table);

/// DT_NEEDED sonames in .dynamic order.
std::vector<std::string> needed_libraries(const ElfObject &obj);

/// First DT_<tag> string value resolved through the dynamic string table.
std::optional<std::string> dynamic_string(const ElfObject &obj, DynamicTag tag);

} // namespace elfql::elf
