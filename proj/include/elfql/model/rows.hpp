#pragma once

// Relational rows derived from a parsed ElfObject, one record type per table.
// Rows that carry byte content (SectionRow::content) view the ElfObject's
// buffer and are valid while that object (or a copy of it) is alive.

#include "elfql/elf/reader.hpp"
#include "elfql/model/demangle.hpp"
#include "elfql/model/disasm.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elfql::model {

struct HeaderRow {
    std::string path;
    std::string file_type;
    std::string machine;
    std::int64_t version = 0;
    std::uint64_t entry_point = 0;
    std::string elf_class;
    std::string data_encoding;
    std::string os_abi;
    std::int64_t phnum = 0;
    std::int64_t shnum = 0;
};

struct SectionRow {
    std::string path;
    std::int64_t index = 0;
    std::string name;
    std::string type;
    std::string flags;
    std::uint64_t address = 0;
    std::uint64_t offset = 0;
    std::uint64_t size = 0;
    std::int64_t link = 0;
    std::int64_t info = 0;
    std::span<const std::uint8_t> content;
};

struct SegmentRow {
    std::string path;
    std::int64_t index = 0;
    std::string type;
    std::string flags;
    std::uint64_t offset = 0;
    std::uint64_t vaddr = 0;
    std::uint64_t filesz = 0;
    std::uint64_t memsz = 0;
    std::uint64_t align = 0;
};

struct SymbolRow {
    std::string path;
    std::string table;
    std::int64_t index = 0;
    std::string name;
    std::string demangle_name;
    std::string section;
    std::string type;
    std::string binding;
    std::string visibility;
    std::uint64_t value = 0;
    std::uint64_t size = 0;
    std::optional<std::string> version;
    bool exported = false;
    bool imported = false;
};

struct StringRow {
    std::string path;
    std::string section;
    std::uint64_t offset = 0;
    std::string value;
};

struct DynamicEntryRow {
    std::string path;
    std::int64_t ordinal = 0;
    std::string tag;
    std::uint64_t value = 0;
};

struct InstructionRow {
    std::string path;
    std::string section;
    std::uint64_t address = 0;
    std::int64_t size = 0;
    std::string mnemonic;
    std::string operands;
};

struct ExportImport {
    bool exported = false;
    bool imported = false;
};

ExportImport derive_export_import(const elf::RawSymbol &sym);

/// Name stored in the `section` column for a symbol's section index.
std::string symbol_section_name(const elf::ElfObject &obj, std::uint32_t shndx);

HeaderRow header_row(const elf::ElfObject &obj);
std::vector<SectionRow> section_rows(const elf::ElfObject &obj);
std::vector<SegmentRow> segment_rows(const elf::ElfObject &obj);
/// .symtab rows then .dynsym rows, each in index order, null symbols included.
std::vector<SymbolRow> symbol_rows(const elf::ElfObject &obj, const Demangler &demangler = itanium_demangler());
/// One row per NUL-terminated entry of every SHT_STRTAB section, ordered by
/// (section index, offset).
std::vector<StringRow> string_rows(const elf::ElfObject &obj);
std::vector<DynamicEntryRow> dynamic_entry_rows(const elf::ElfObject &obj);
/// Linear sweep of every executable section. Bytes the decoder rejects become
/// one-byte "(bad)" rows. Empty when the decoder does not support the machine.
std::vector<InstructionRow> instruction_rows(const elf::ElfObject &obj,
                                             const InstructionDecoder &decoder = x86_64_decoder());

} // namespace elfql::model
