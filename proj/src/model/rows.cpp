#include "elfql/model/rows.hpp"

#include <algorithm>

namespace elfql::model {

using elf::SymbolBinding;
using elf::SymbolTable;
using elf::SymbolType;
using elf::SymbolVisibility;

ExportImport derive_export_import(const elf::RawSymbol &sym) {
    const bool bindable = sym.binding == SymbolBinding::Global || sym.binding == SymbolBinding::Weak;
    const bool defined = sym.shndx != elf::kShnUndef;
    const bool exported_type = sym.type == SymbolType::Func || sym.type == SymbolType::Object ||
                               sym.type == SymbolType::Tls || sym.type == SymbolType::GnuIfunc;
    ExportImport out;
    out.exported = defined && bindable && exported_type && sym.visibility == SymbolVisibility::Default;
    out.imported = !defined && bindable && sym.table == SymbolTable::DynSym;
    return out;
}

std::string symbol_section_name(const elf::ElfObject &obj, std::uint32_t shndx) {
    switch (shndx) {
    case elf::kShnUndef: return "SHN_UNDEF";
    case elf::kShnAbs: return "SHN_ABS";
    case elf::kShnCommon: return "SHN_COMMON";
    default: break;
    }
    if (shndx < obj.sections().size()) return obj.sections()[shndx].name;
    return std::to_string(shndx);
}

HeaderRow header_row(const elf::ElfObject &obj) {
    const auto &h = obj.header();
    HeaderRow row;
    row.path = obj.path();
    row.file_type = to_string(h.file_type);
    row.machine = to_string(h.machine);
    row.version = h.version;
    row.entry_point = h.entry_point;
    row.elf_class = to_string(h.ident.elf_class);
    row.data_encoding = to_string(h.ident.data_encoding);
    row.os_abi = elf::os_abi_name(h.ident.os_abi);
    row.phnum = h.phnum;
    row.shnum = h.shnum;
    return row;
}

std::vector<SectionRow> section_rows(const elf::ElfObject &obj) {
    std::vector<SectionRow> rows;
    rows.reserve(obj.sections().size());
    for (const auto &s : obj.sections()) {
        rows.push_back(SectionRow{obj.path(), s.index, s.name, to_string(s.type), elf::section_flags_string(s.flags),
                                  s.address, s.offset, s.size, s.link, s.info, s.content});
    }
    return rows;
}

std::vector<SegmentRow> segment_rows(const elf::ElfObject &obj) {
    std::vector<SegmentRow> rows;
    rows.reserve(obj.segments().size());
    for (const auto &p : obj.segments()) {
        rows.push_back(SegmentRow{obj.path(), p.index, to_string(p.type), elf::segment_flags_string(p.flags),
                                  p.offset, p.vaddr, p.filesz, p.memsz, p.align});
    }
    return rows;
}

std::vector<SymbolRow> symbol_rows(const elf::ElfObject &obj, const Demangler &demangler) {
    std::vector<SymbolRow> rows;
    rows.reserve(obj.symbols(SymbolTable::SymTab).size() + obj.symbols(SymbolTable::DynSym).size());
    for (const auto table : {SymbolTable::SymTab, SymbolTable::DynSym}) {
        const std::string table_name = to_string(table);
        for (const auto &sym : obj.symbols(table)) {
            const auto flags = derive_export_import(sym);
            SymbolRow row;
            row.path = obj.path();
            row.table = table_name;
            row.index = sym.index;
            row.name = sym.name;
            row.demangle_name = demangle(sym.name, demangler);
            row.section = symbol_section_name(obj, sym.shndx);
            row.type = to_string(sym.type);
            row.binding = to_string(sym.binding);
            row.visibility = to_string(sym.visibility);
            row.value = sym.value;
            row.size = sym.size;
            if (sym.version) row.version = sym.version->name;
            row.exported = flags.exported;
            row.imported = flags.imported;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<StringRow> string_rows(const elf::ElfObject &obj) {
    std::vector<StringRow> rows;
    for (const auto &s : obj.sections()) {
        if (s.type != elf::SectionType::StrTab) continue;
        const auto bytes = s.content;
        std::size_t start = 0;
        while (start < bytes.size()) {
            const auto nul = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.end(), 0);
            const auto end = static_cast<std::size_t>(nul - bytes.begin());
            rows.push_back(StringRow{obj.path(), s.name, start,
                                     std::string(reinterpret_cast<const char *>(bytes.data()) + start, end - start)});
            start = end + 1;
        }
    }
    return rows;
}

std::vector<DynamicEntryRow> dynamic_entry_rows(const elf::ElfObject &obj) {
    std::vector<DynamicEntryRow> rows;
    rows.reserve(obj.dynamic_entries().size());
    for (const auto &e : obj.dynamic_entries()) {
        rows.push_back(DynamicEntryRow{obj.path(), e.ordinal, e.tag_name(), e.value});
    }
    return rows;
}

std::vector<InstructionRow> instruction_rows(const elf::ElfObject &obj, const InstructionDecoder &decoder) {
    std::vector<InstructionRow> rows;
    if (!decoder.supports(obj.header().machine)) return rows;
    for (const auto &s : obj.sections()) {
        if (!s.is_executable() || s.type == elf::SectionType::NoBits) continue;
        std::size_t pos = 0;
        while (pos < s.content.size()) {
            const std::uint64_t address = s.address + pos;
            auto insn = decoder.decode(s.content.subspan(pos), address);
            if (insn && insn->length > 0) {
                rows.push_back(InstructionRow{obj.path(), s.name, address, static_cast<std::int64_t>(insn->length),
                                              std::move(insn->mnemonic), std::move(insn->operands)});
                pos += insn->length;
            } else {
                rows.push_back(InstructionRow{obj.path(), s.name, address, 1, "(bad)", ""});
                ++pos;
            }
        }
    }
    return rows;
}

} // namespace elfql::model
