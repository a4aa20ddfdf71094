#pragma once

// Minimal ELF image writer: enough structure for readers and dumping tools
// (headers, .text stubs, symbol tables, string tables, .dynamic, GNU symbol
// versioning). Images are not meant to be loaded by a real dynamic linker.

#include "elfql/elf/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace elfql::bench {

enum class Placement { Text, Data, Bss, Undefined, Absolute };

struct SymbolSpec {
    std::string name;
    elf::SymbolType type = elf::SymbolType::Func;
    elf::SymbolBinding binding = elf::SymbolBinding::Global;
    elf::SymbolVisibility visibility = elf::SymbolVisibility::Default;
    Placement placement = Placement::Text;
    /// Text symbols occupy max(size, 1) bytes: a `ret` followed by `int3` fill.
    std::uint64_t size = 1;
    /// Empty for unversioned. With `version_file` empty the version is
    /// defined by this object, otherwise it is required from that soname.
    std::string version;
    std::string version_file;
    /// Marks a defined version as non-default ("sym@VER").
    bool hidden_version = false;
};

struct ElfImageSpec {
    elf::ElfClass elf_class = elf::ElfClass::Elf64;
    elf::DataEncoding encoding = elf::DataEncoding::Lsb;
    elf::Machine machine = elf::Machine::X86_64;
    elf::FileType file_type = elf::FileType::Dyn;

    /// Emit .dynsym/.dynstr/.dynamic. When false the object looks statically
    /// linked and dynamic-only fields below are ignored.
    bool dynamic = true;
    std::vector<std::string> needed;
    std::optional<std::string> soname;
    std::optional<std::string> runpath;
    std::optional<std::string> rpath;
    std::vector<SymbolSpec> dynamic_symbols;

    /// Emit .symtab/.strtab holding these symbols (after the null symbol).
    bool symtab = false;
    std::vector<SymbolSpec> static_symbols;
};

/// Serializes the image. Deterministic for a given spec. Within each symbol
/// table LOCAL symbols are placed first; relative order is otherwise kept.
std::vector<std::uint8_t> build_elf(const ElfImageSpec &spec);

} // namespace elfql::bench
