#include "elfql/model/schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace elfql::model {
namespace {

using enum ColumnType;

constexpr std::array<Column, 10> kHeaderColumns = {{
    {"path", Text}, {"file_type", Text}, {"machine", Text}, {"version", Integer}, {"entry_point", Integer},
    {"class", Text}, {"data_encoding", Text}, {"os_abi", Text}, {"phnum", Integer}, {"shnum", Integer},
}};

constexpr std::array<Column, 11> kSectionColumns = {{
    {"path", Text}, {"index", Integer}, {"name", Text}, {"type", Text}, {"flags", Text}, {"address", Integer},
    {"offset", Integer}, {"size", Integer}, {"link", Integer}, {"info", Integer}, {"content", Blob},
}};

constexpr std::array<Column, 9> kSegmentColumns = {{
    {"path", Text}, {"index", Integer}, {"type", Text}, {"flags", Text}, {"offset", Integer},
    {"vaddr", Integer}, {"filesz", Integer}, {"memsz", Integer}, {"align", Integer},
}};

constexpr std::array<Column, 14> kSymbolColumns = {{
    {"path", Text}, {"table", Text}, {"index", Integer}, {"name", Text}, {"demangle_name", Text},
    {"section", Text}, {"type", Text}, {"binding", Text}, {"visibility", Text}, {"value", Integer},
    {"size", Integer}, {"version", Text}, {"exported", Integer}, {"imported", Integer},
}};

constexpr std::array<Column, 4> kStringColumns = {{
    {"path", Text}, {"section", Text}, {"offset", Integer}, {"value", Text},
}};

constexpr std::array<Column, 4> kDynamicColumns = {{
    {"path", Text}, {"ordinal", Integer}, {"tag", Text}, {"value", Integer},
}};

constexpr std::array<Column, 6> kInstructionColumns = {{
    {"path", Text}, {"section", Text}, {"address", Integer}, {"size", Integer}, {"mnemonic", Text},
    {"operands", Text},
}};

const std::array<TableInfo, 7> kTables = {{
    {TableId::Headers, "elf_headers", kHeaderColumns},
    {TableId::Sections, "elf_sections", kSectionColumns},
    {TableId::Segments, "elf_segments", kSegmentColumns},
    {TableId::Symbols, "elf_symbols", kSymbolColumns},
    {TableId::Strings, "elf_strings", kStringColumns},
    {TableId::DynamicEntries, "elf_dynamic_entries", kDynamicColumns},
    {TableId::Instructions, "elf_instructions", kInstructionColumns},
}};

Cell integer(std::uint64_t v) { return static_cast<std::int64_t>(v); }
Cell integer(std::int64_t v) { return v; }
Cell text(const std::string &s) { return std::string_view(s); }

Cell cell_of(const HeaderRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return text(r.file_type);
    case 2: return text(r.machine);
    case 3: return integer(r.version);
    case 4: return integer(r.entry_point);
    case 5: return text(r.elf_class);
    case 6: return text(r.data_encoding);
    case 7: return text(r.os_abi);
    case 8: return integer(r.phnum);
    case 9: return integer(r.shnum);
    default: return {};
    }
}

Cell cell_of(const SectionRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return integer(r.index);
    case 2: return text(r.name);
    case 3: return text(r.type);
    case 4: return text(r.flags);
    case 5: return integer(r.address);
    case 6: return integer(r.offset);
    case 7: return integer(r.size);
    case 8: return integer(r.link);
    case 9: return integer(r.info);
    case 10: return r.content;
    default: return {};
    }
}

Cell cell_of(const SegmentRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return integer(r.index);
    case 2: return text(r.type);
    case 3: return text(r.flags);
    case 4: return integer(r.offset);
    case 5: return integer(r.vaddr);
    case 6: return integer(r.filesz);
    case 7: return integer(r.memsz);
    case 8: return integer(r.align);
    default: return {};
    }
}

Cell cell_of(const SymbolRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return text(r.table);
    case 2: return integer(r.index);
    case 3: return text(r.name);
    case 4: return text(r.demangle_name);
    case 5: return text(r.section);
    case 6: return text(r.type);
    case 7: return text(r.binding);
    case 8: return text(r.visibility);
    case 9: return integer(r.value);
    case 10: return integer(r.size);
    case 11: return r.version ? text(*r.version) : Cell{};
    case 12: return std::int64_t{r.exported};
    case 13: return std::int64_t{r.imported};
    default: return {};
    }
}

Cell cell_of(const StringRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return text(r.section);
    case 2: return integer(r.offset);
    case 3: return text(r.value);
    default: return {};
    }
}

Cell cell_of(const DynamicEntryRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return integer(r.ordinal);
    case 2: return text(r.tag);
    case 3: return integer(r.value);
    default: return {};
    }
}

Cell cell_of(const InstructionRow &r, std::size_t c) {
    switch (c) {
    case 0: return text(r.path);
    case 1: return text(r.section);
    case 2: return integer(r.address);
    case 3: return integer(r.size);
    case 4: return text(r.mnemonic);
    case 5: return text(r.operands);
    default: return {};
    }
}

template <typename Row>
class VectorBatch final : public RowBatch {
public:
    explicit VectorBatch(std::vector<Row> rows) : rows_(std::move(rows)) {}
    std::size_t size() const override { return rows_.size(); }
    Cell cell(std::size_t row, std::size_t column) const override { return cell_of(rows_[row], column); }

private:
    std::vector<Row> rows_;
};

template <typename Row>
std::unique_ptr<RowBatch> batch(std::vector<Row> rows) {
    return std::make_unique<VectorBatch<Row>>(std::move(rows));
}

bool iequals(std::string_view a, std::string_view b) {
    return std::ranges::equal(a, b, [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
}

} // namespace

std::span<const TableInfo> schema_tables() { return kTables; }

const TableInfo &table_info(TableId id) { return kTables[static_cast<std::size_t>(id)]; }

const TableInfo *find_table(std::string_view name) {
    for (const auto &t : kTables) {
        if (iequals(t.name, name)) return &t;
    }
    return nullptr;
}

std::unique_ptr<RowBatch> make_row_batch(TableId table, const elf::ElfObject &obj, const RowOptions &options) {
    switch (table) {
    case TableId::Headers: return batch(std::vector<HeaderRow>{header_row(obj)});
    case TableId::Sections: return batch(section_rows(obj));
    case TableId::Segments: return batch(segment_rows(obj));
    case TableId::Symbols: return batch(symbol_rows(obj, *options.demangler));
    case TableId::Strings: return batch(string_rows(obj));
    case TableId::DynamicEntries: return batch(dynamic_entry_rows(obj));
    case TableId::Instructions: return batch(instruction_rows(obj, *options.decoder));
    }
    return nullptr;
}

} // namespace elfql::model
