#pragma once

#include "elfql/corpus/catalog.hpp"
#include "elfql/model/schema.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace elfql::engine {

enum class Strategy { Lazy, Memoized };

struct TableStrategy {
    std::string table_name;
    Strategy mode = Strategy::Lazy;
};

/// Every table with the same mode.
std::vector<TableStrategy> uniform_strategies(Strategy mode);

using Value = std::variant<std::monostate, std::int64_t, double, std::string, std::vector<std::uint8_t>>;
using Row = std::vector<Value>;
using Params = std::map<std::string, Value, std::less<>>;

struct QueryResult {
    std::vector<std::string> columns;
    std::vector<Row> rows;

    bool operator==(const QueryResult &) const = default;
};

struct ExportSummary {
    std::size_t tables = 0;
    std::size_t rows = 0;
};

/// One SQL connection over a catalog. Tables are exposed as `<name>_virtual`
/// virtual tables; `<name>` is a view over the virtual table (LAZY) or a
/// table materialized from it at open time (MEMOIZED). Not thread-safe; use
/// one Session per thread.
class Session {
public:
    /// Throws RegistrationFailure, or Error for an unknown table name in
    /// `strategies`.
    static Session open(std::shared_ptr<const corpus::CorpusCatalog> catalog,
                        const std::vector<TableStrategy> &strategies = {}, model::RowOptions options = {});

    /// Read-only session over a previously exported database file.
    static Session open_file(const std::filesystem::path &database);

    Session(Session &&) noexcept;
    Session &operator=(Session &&) noexcept;
    ~Session();

    /// Runs a single read-only statement. Parameters are bound by name; keys
    /// may omit the ':' prefix. Throws SqlError or WriteRejected.
    QueryResult execute(std::string_view sql, const Params &params = {});

    /// Materializes every table into a standalone SQLite file. Written to a
    /// temporary sibling and renamed into place, so failures leave no file.
    ExportSummary export_database(const std::filesystem::path &dest, bool overwrite = false);

    Strategy strategy(model::TableId table) const;
    const corpus::CorpusCatalog &catalog() const;
    sqlite3 *handle() const noexcept;

    struct State;

private:
    explicit Session(std::unique_ptr<State> state);
    std::unique_ptr<State> state_;
};

/// Rendering used by the CLI and by tests comparing result sets.
std::string value_to_string(const Value &v);

} // namespace elfql::engine
