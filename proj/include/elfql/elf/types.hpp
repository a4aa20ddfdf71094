#pragma once

// ELF enumerations and their canonical text renderings. Enumerations are
// open: any raw code is representable and unknown codes render as decimal.

#include <cstdint>
#include <string>

namespace elfql::elf {

enum class ElfClass : std::uint8_t { Elf32 = 1, Elf64 = 2 };
enum class DataEncoding : std::uint8_t { Lsb = 1, Msb = 2 };

enum class FileType : std::uint16_t { None = 0, Rel = 1, Exec = 2, Dyn = 3, Core = 4 };

enum class Machine : std::uint16_t {
    None = 0,
    Sparc = 2,
    I386 = 3,
    M68k = 4,
    Mips = 8,
    PowerPc = 20,
    PowerPc64 = 21,
    S390 = 22,
    Arm = 40,
    SuperH = 42,
    SparcV9 = 43,
    Ia64 = 50,
    X86_64 = 62,
    AArch64 = 183,
    RiscV = 243,
    LoongArch = 258,
};

enum class SectionType : std::uint32_t {
    Null = 0,
    ProgBits = 1,
    SymTab = 2,
    StrTab = 3,
    Rela = 4,
    Hash = 5,
    Dynamic = 6,
    Note = 7,
    NoBits = 8,
    Rel = 9,
    ShLib = 10,
    DynSym = 11,
    InitArray = 14,
    FiniArray = 15,
    PreinitArray = 16,
    Group = 17,
    SymTabShndx = 18,
    Relr = 19,
    GnuAttributes = 0x6ffffff5,
    GnuHash = 0x6ffffff6,
    GnuLibList = 0x6ffffff7,
    Checksum = 0x6ffffff8,
    GnuVerdef = 0x6ffffffd,
    GnuVerneed = 0x6ffffffe,
    GnuVersym = 0x6fffffff,
};

enum class SegmentType : std::uint32_t {
    Null = 0,
    Load = 1,
    Dynamic = 2,
    Interp = 3,
    Note = 4,
    ShLib = 5,
    Phdr = 6,
    Tls = 7,
    GnuEhFrame = 0x6474e550,
    GnuStack = 0x6474e551,
    GnuRelro = 0x6474e552,
    GnuProperty = 0x6474e553,
};

enum class SymbolType : std::uint8_t {
    NoType = 0,
    Object = 1,
    Func = 2,
    Section = 3,
    File = 4,
    Common = 5,
    Tls = 6,
    GnuIfunc = 10,
};

enum class SymbolBinding : std::uint8_t { Local = 0, Global = 1, Weak = 2 };

enum class SymbolVisibility : std::uint8_t { Default = 0, Internal = 1, Hidden = 2, Protected = 3 };

enum class SymbolTable : std::uint8_t { SymTab, DynSym };

enum class DynamicTag : std::int64_t {
    Null = 0,
    Needed = 1,
    PltRelSz = 2,
    PltGot = 3,
    Hash = 4,
    StrTab = 5,
    SymTab = 6,
    Rela = 7,
    RelaSz = 8,
    RelaEnt = 9,
    StrSz = 10,
    SymEnt = 11,
    Init = 12,
    Fini = 13,
    SoName = 14,
    RPath = 15,
    Symbolic = 16,
    Rel = 17,
    RelSz = 18,
    RelEnt = 19,
    PltRel = 20,
    Debug = 21,
    TextRel = 22,
    JmpRel = 23,
    BindNow = 24,
    InitArray = 25,
    FiniArray = 26,
    InitArraySz = 27,
    FiniArraySz = 28,
    RunPath = 29,
    Flags = 30,
    PreinitArray = 32,
    PreinitArraySz = 33,
    SymTabShndx = 34,
    RelrSz = 35,
    Relr = 36,
    RelrEnt = 37,
    GnuHash = 0x6ffffef5,
    VerSym = 0x6ffffff0,
    RelaCount = 0x6ffffff9,
    RelCount = 0x6ffffffa,
    Flags1 = 0x6ffffffb,
    VerDef = 0x6ffffffc,
    VerDefNum = 0x6ffffffd,
    VerNeed = 0x6ffffffe,
    VerNeedNum = 0x6fffffff,
};

// Reserved section indices.
inline constexpr std::uint32_t kShnUndef = 0;
inline constexpr std::uint32_t kShnLoReserve = 0xff00;
inline constexpr std::uint32_t kShnAbs = 0xfff1;
inline constexpr std::uint32_t kShnCommon = 0xfff2;
inline constexpr std::uint32_t kShnXIndex = 0xffff;

// Section header flags.
inline constexpr std::uint64_t kShfWrite = 0x1;
inline constexpr std::uint64_t kShfAlloc = 0x2;
inline constexpr std::uint64_t kShfExecInstr = 0x4;
inline constexpr std::uint64_t kShfMerge = 0x10;
inline constexpr std::uint64_t kShfStrings = 0x20;
inline constexpr std::uint64_t kShfInfoLink = 0x40;
inline constexpr std::uint64_t kShfLinkOrder = 0x80;
inline constexpr std::uint64_t kShfOsNonconforming = 0x100;
inline constexpr std::uint64_t kShfGroup = 0x200;
inline constexpr std::uint64_t kShfTls = 0x400;
inline constexpr std::uint64_t kShfCompressed = 0x800;
inline constexpr std::uint64_t kShfMaskOs = 0x0ff00000;
inline constexpr std::uint64_t kShfExclude = 0x80000000;
inline constexpr std::uint64_t kShfMaskProc = 0xf0000000;

// Program header flags.
inline constexpr std::uint32_t kPfX = 0x1;
inline constexpr std::uint32_t kPfW = 0x2;
inline constexpr std::uint32_t kPfR = 0x4;

// Symbol version indices.
inline constexpr std::uint16_t kVerNdxLocal = 0;
inline constexpr std::uint16_t kVerNdxGlobal = 1;
inline constexpr std::uint16_t kVersymHidden = 0x8000;
inline constexpr std::uint16_t kVerFlgBase = 0x1;

std::string to_string(ElfClass c);
std::string to_string(DataEncoding d);
std::string to_string(FileType t);
std::string to_string(Machine m);
std::string to_string(SectionType t);
std::string to_string(SegmentType t);
std::string to_string(SymbolType t);
std::string to_string(SymbolBinding b);
std::string to_string(SymbolVisibility v);
std::string to_string(SymbolTable t);
std::string to_string(DynamicTag t);
std::string os_abi_name(std::uint8_t os_abi);

/// readelf-style flag letters, e.g. "WA" or "AX".
std::string section_flags_string(std::uint64_t flags);
/// Subset of "RWX" in that order.
std::string segment_flags_string(std::uint32_t flags);

} // namespace elfql::elf
