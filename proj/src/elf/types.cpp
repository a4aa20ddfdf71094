#include "elfql/elf/types.hpp"

#include <string>

namespace elfql::elf {
namespace {

template <typename E>
std::string decimal(E e) {
    return std::to_string(static_cast<std::underlying_type_t<E>>(e) + 0);
}

} // namespace

std::string to_string(ElfClass c) {
    switch (c) {
    case ElfClass::Elf32: return "ELF32";
    case ElfClass::Elf64: return "ELF64";
    }
    return decimal(c);
}

std::string to_string(DataEncoding d) {
    switch (d) {
    case DataEncoding::Lsb: return "LSB";
    case DataEncoding::Msb: return "MSB";
    }
    return decimal(d);
}

std::string to_string(FileType t) {
    switch (t) {
    case FileType::None: return "NONE";
    case FileType::Rel: return "REL";
    case FileType::Exec: return "EXEC";
    case FileType::Dyn: return "DYN";
    case FileType::Core: return "CORE";
    }
    return decimal(t);
}

std::string to_string(Machine m) {
    switch (m) {
    case Machine::None: return "NONE";
    case Machine::Sparc: return "SPARC";
    case Machine::I386: return "386";
    case Machine::M68k: return "68K";
    case Machine::Mips: return "MIPS";
    case Machine::PowerPc: return "PPC";
    case Machine::PowerPc64: return "PPC64";
    case Machine::S390: return "S390";
    case Machine::Arm: return "ARM";
    case Machine::SuperH: return "SH";
    case Machine::SparcV9: return "SPARCV9";
    case Machine::Ia64: return "IA_64";
    case Machine::X86_64: return "X86_64";
    case Machine::AArch64: return "AARCH64";
    case Machine::RiscV: return "RISCV";
    case Machine::LoongArch: return "LOONGARCH";
    }
    return decimal(m);
}

std::string to_string(SectionType t) {
    switch (t) {
    case SectionType::Null: return "NULL";
    case SectionType::ProgBits: return "PROGBITS";
    case SectionType::SymTab: return "SYMTAB";
    case SectionType::StrTab: return "STRTAB";
    case SectionType::Rela: return "RELA";
    case SectionType::Hash: return "HASH";
    case SectionType::Dynamic: return "DYNAMIC";
    case SectionType::Note: return "NOTE";
    case SectionType::NoBits: return "NOBITS";
    case SectionType::Rel: return "REL";
    case SectionType::ShLib: return "SHLIB";
    case SectionType::DynSym: return "DYNSYM";
    case SectionType::InitArray: return "INIT_ARRAY";
    case SectionType::FiniArray: return "FINI_ARRAY";
    case SectionType::PreinitArray: return "PREINIT_ARRAY";
    case SectionType::Group: return "GROUP";
    case SectionType::SymTabShndx: return "SYMTAB_SHNDX";
    case SectionType::Relr: return "RELR";
    case SectionType::GnuAttributes: return "GNU_ATTRIBUTES";
    case SectionType::GnuHash: return "GNU_HASH";
    case SectionType::GnuLibList: return "GNU_LIBLIST";
    case SectionType::Checksum: return "CHECKSUM";
    case SectionType::GnuVerdef: return "VERDEF";
    case SectionType::GnuVerneed: return "VERNEED";
    case SectionType::GnuVersym: return "VERSYM";
    }
    return decimal(t);
}

std::string to_string(SegmentType t) {
    switch (t) {
    case SegmentType::Null: return "NULL";
    case SegmentType::Load: return "LOAD";
    case SegmentType::Dynamic: return "DYNAMIC";
    case SegmentType::Interp: return "INTERP";
    case SegmentType::Note: return "NOTE";
    case SegmentType::ShLib: return "SHLIB";
    case SegmentType::Phdr: return "PHDR";
    case SegmentType::Tls: return "TLS";
    case SegmentType::GnuEhFrame: return "GNU_EH_FRAME";
    case SegmentType::GnuStack: return "GNU_STACK";
    case SegmentType::GnuRelro: return "GNU_RELRO";
    case SegmentType::GnuProperty: return "GNU_PROPERTY";
    }
    return decimal(t);
}

std::string to_string(SymbolType t) {
    switch (t) {
    case SymbolType::NoType: return "NOTYPE";
    case SymbolType::Object: return "OBJECT";
    case SymbolType::Func: return "FUNC";
    case SymbolType::Section: return "SECTION";
    case SymbolType::File: return "FILE";
    case SymbolType::Common: return "COMMON";
    case SymbolType::Tls: return "TLS";
    case SymbolType::GnuIfunc: return "GNU_IFUNC";
    }
    return decimal(t);
}

std::string to_string(SymbolBinding b) {
    switch (b) {
    case SymbolBinding::Local: return "LOCAL";
    case SymbolBinding::Global: return "GLOBAL";
    case SymbolBinding::Weak: return "WEAK";
    }
    return decimal(b);
}

std::string to_string(SymbolVisibility v) {
    switch (v) {
    case SymbolVisibility::Default: return "DEFAULT";
    case SymbolVisibility::Internal: return "INTERNAL";
    case SymbolVisibility::Hidden: return "HIDDEN";
    case SymbolVisibility::Protected: return "PROTECTED";
    }
    return decimal(v);
}

std::string to_string(SymbolTable t) {
    return t == SymbolTable::DynSym ? ".dynsym" : ".symtab";
}

std::string to_string(DynamicTag t) {
    switch (t) {
    case DynamicTag::Null: return "NULL";
    case DynamicTag::Needed: return "NEEDED";
    case DynamicTag::PltRelSz: return "PLTRELSZ";
    case DynamicTag::PltGot: return "PLTGOT";
    case DynamicTag::Hash: return "HASH";
    case DynamicTag::StrTab: return "STRTAB";
    case DynamicTag::SymTab: return "SYMTAB";
    case DynamicTag::Rela: return "RELA";
    case DynamicTag::RelaSz: return "RELASZ";
    case DynamicTag::RelaEnt: return "RELAENT";
    case DynamicTag::StrSz: return "STRSZ";
    case DynamicTag::SymEnt: return "SYMENT";
    case DynamicTag::Init: return "INIT";
    case DynamicTag::Fini: return "FINI";
    case DynamicTag::SoName: return "SONAME";
    case DynamicTag::RPath: return "RPATH";
    case DynamicTag::Symbolic: return "SYMBOLIC";
    case DynamicTag::Rel: return "REL";
    case DynamicTag::RelSz: return "RELSZ";
    case DynamicTag::RelEnt: return "RELENT";
    case DynamicTag::PltRel: return "PLTREL";
    case DynamicTag::Debug: return "DEBUG";
    case DynamicTag::TextRel: return "TEXTREL";
    case DynamicTag::JmpRel: return "JMPREL";
    case DynamicTag::BindNow: return "BIND_NOW";
    case DynamicTag::InitArray: return "INIT_ARRAY";
    case DynamicTag::FiniArray: return "FINI_ARRAY";
    case DynamicTag::InitArraySz: return "INIT_ARRAYSZ";
    case DynamicTag::FiniArraySz: return "FINI_ARRAYSZ";
    case DynamicTag::RunPath: return "RUNPATH";
    case DynamicTag::Flags: return "FLAGS";
    case DynamicTag::PreinitArray: return "PREINIT_ARRAY";
    case DynamicTag::PreinitArraySz: return "PREINIT_ARRAYSZ";
    case DynamicTag::SymTabShndx: return "SYMTAB_SHNDX";
    case DynamicTag::RelrSz: return "RELRSZ";
    case DynamicTag::Relr: return "RELR";
    case DynamicTag::RelrEnt: return "RELRENT";
    case DynamicTag::GnuHash: return "GNU_HASH";
    case DynamicTag::VerSym: return "VERSYM";
    case DynamicTag::RelaCount: return "RELACOUNT";
    case DynamicTag::RelCount: return "RELCOUNT";
    case DynamicTag::Flags1: return "FLAGS_1";
    case DynamicTag::VerDef: return "VERDEF";
    case DynamicTag::VerDefNum: return "VERDEFNUM";
    case DynamicTag::VerNeed: return "VERNEED";
    case DynamicTag::VerNeedNum: return "VERNEEDNUM";
    }
    return std::to_string(static_cast<std::int64_t>(t));
}

std::string os_abi_name(std::uint8_t os_abi) {
    switch (os_abi) {
    case 0: return "SYSV";
    case 1: return "HPUX";
    case 2: return "NETBSD";
    case 3: return "GNU";
    case 6: return "SOLARIS";
    case 9: return "FREEBSD";
    case 12: return "OPENBSD";
    case 64: return "ARM_AEABI";
    case 97: return "ARM";
    case 255: return "STANDALONE";
    default: return std::to_string(os_abi);
    }
}

std::string section_flags_string(std::uint64_t flags) {
    static constexpr struct {
        std::uint64_t bit;
        char letter;
    } kLetters[] = {
        {kShfWrite, 'W'},     {kShfAlloc, 'A'},     {kShfExecInstr, 'X'},       {kShfMerge, 'M'},
        {kShfStrings, 'S'},   {kShfInfoLink, 'I'},  {kShfLinkOrder, 'L'},       {kShfOsNonconforming, 'O'},
        {kShfGroup, 'G'},     {kShfTls, 'T'},       {kShfCompressed, 'C'},      {kShfExclude, 'E'},
    };
    std::string out;
    std::uint64_t known = 0;
    for (const auto &l : kLetters) {
        known |= l.bit;
        if (flags & l.bit) out += l.letter;
    }
    const std::uint64_t rest = flags & ~known;
    if (rest & kShfMaskOs) out += 'o';
    if (rest & kShfMaskProc) out += 'p';
    if (rest & ~(kShfMaskOs | kShfMaskProc)) out += 'x';
    return out;
}

std::string segment_flags_string(std::uint32_t flags) {
    std::string out;
    if (flags & kPfR) out += 'R';
    if (flags & kPfW) out += 'W';
    if (flags & kPfX) out += 'X';
    return out;
}

} // namespace elfql::elf
