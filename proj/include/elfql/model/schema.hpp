#pragma once

// Table catalogue of the relational model and a type-erased per-file row
// source, so query engines can stream rows without knowing the row structs.

#include "elfql/elf/reader.hpp"
#include "elfql/model/rows.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <variant>

namespace elfql::model {

enum class ColumnType { Integer, Text, Blob };

struct Column {
    std::string_view name;
    ColumnType type;
};

enum class TableId { Headers, Sections, Segments, Symbols, Strings, DynamicEntries, Instructions };

struct TableInfo {
    TableId id;
    std::string_view name;
    std::span<const Column> columns;
};

/// A single column value. Unsigned ELF quantities are stored as the 64-bit
/// two's-complement integer with the same bits.
using Cell = std::variant<std::monostate, std::int64_t, std::string_view, std::span<const std::uint8_t>>;

/// The seven tables, in a fixed order.
std::span<const TableInfo> schema_tables();
const TableInfo &table_info(TableId id);
/// Case-insensitive lookup by table name.
const TableInfo *find_table(std::string_view name);

/// Rows of one table for one file.
class RowBatch {
public:
    virtual ~RowBatch() = default;
    virtual std::size_t size() const = 0;
    /// Views returned by the cell stay valid for the batch's lifetime.
    virtual Cell cell(std::size_t row, std::size_t column) const = 0;
};

struct RowOptions {
    const Demangler *demangler = &itanium_demangler();
    const InstructionDecoder *decoder = &x86_64_decoder();
};

std::unique_ptr<RowBatch> make_row_batch(TableId table, const elf::ElfObject &obj, const RowOptions &options = {});

} // namespace elfql::model
