#include "elfql/engine/session.hpp"

#include "elfql/error.hpp"

#include <sqlite3.h>
#include <unistd.h>

#include <charconv>
#include <cstring>
#include <set>

namespace elfql::engine {

namespace fs = std::filesystem;
using model::TableId;

namespace {

constexpr const char *kModuleName = "elf_table";
constexpr const char *kExportSchema = "elfql_export";

std::string quote_identifier(std::string_view name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string virtual_name(std::string_view table) { return std::string(table) + "_virtual"; }

// Materialized tables get a path index; most queries filter on one file.
std::string path_index_sql(std::string_view schema, const model::TableInfo &t) {
    const std::string columns = t.id == TableId::Symbols ? "path, \"table\"" : "path";
    std::string prefix = schema.empty() ? std::string() : std::string(schema) + ".";
    return "CREATE INDEX " + prefix + quote_identifier(std::string(t.name) + "_path") + " ON " +
           quote_identifier(t.name) + "(" + columns + ")";
}

const corpus::CorpusCatalog &empty_catalog() {
    static const corpus::CorpusCatalog instance;
    return instance;
}

struct StmtDeleter {
    void operator()(sqlite3_stmt *stmt) const noexcept { sqlite3_finalize(stmt); }
};
using StmtPtr = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

} // namespace

struct Session::State {
    sqlite3 *db = nullptr;
    std::shared_ptr<const corpus::CorpusCatalog> catalog;
    model::RowOptions options;
    std::map<TableId, Strategy> strategies;
    bool internal = false; // set while the session runs its own statements

    ~State() {
        if (db != nullptr) sqlite3_close_v2(db);
    }

    void exec(const std::string &sql) {
        char *err = nullptr;
        if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string message = err != nullptr ? err : sqlite3_errmsg(db);
            sqlite3_free(err);
            throw SqlError(message + " (in: " + sql + ")");
        }
    }

    std::int64_t scalar(const std::string &sql) {
        sqlite3_stmt *raw = nullptr;
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) throw SqlError(sqlite3_errmsg(db));
        StmtPtr stmt(raw);
        if (sqlite3_step(stmt.get()) != SQLITE_ROW) throw SqlError(sqlite3_errmsg(db));
        return sqlite3_column_int64(stmt.get(), 0);
    }
};

namespace {

// ---------------------------------------------------------------------------
// Virtual table module

struct ElfVtab {
    sqlite3_vtab base{};
    const Session::State *state = nullptr;
    TableId table = TableId::Headers;
};

struct ElfCursor {
    sqlite3_vtab_cursor base{};
    std::vector<const corpus::CatalogEntry *> entries;
    std::size_t entry = 0;
    std::unique_ptr<model::RowBatch> batch;
    std::size_t row = 0;
    sqlite3_int64 rowid = 0;
};

std::string declare_sql(const model::TableInfo &info) {
    std::string sql = "CREATE TABLE x(";
    for (std::size_t i = 0; i < info.columns.size(); ++i) {
        const auto &col = info.columns[i];
        if (i != 0) sql += ", ";
        sql += quote_identifier(col.name);
        switch (col.type) {
        case model::ColumnType::Integer: sql += " INTEGER"; break;
        case model::ColumnType::Text: sql += " TEXT"; break;
        case model::ColumnType::Blob: sql += " BLOB"; break;
        }
    }
    return sql + ")";
}

int vtab_connect(sqlite3 *db, void *aux, int argc, const char *const *argv, sqlite3_vtab **out, char **err) {
    if (argc < 4) {
        *err = sqlite3_mprintf("%s: table name argument required", kModuleName);
        return SQLITE_ERROR;
    }
    std::string name = argv[3];
    if (name.size() >= 2 && (name.front() == '\'' || name.front() == '"')) name = name.substr(1, name.size() - 2);
    const model::TableInfo *info = model::find_table(name);
    if (info == nullptr) {
        *err = sqlite3_mprintf("%s: unknown table '%s'", kModuleName, name.c_str());
        return SQLITE_ERROR;
    }
    if (const int rc = sqlite3_declare_vtab(db, declare_sql(*info).c_str()); rc != SQLITE_OK) return rc;
    auto *vtab = new ElfVtab;
    vtab->state = static_cast<const Session::State *>(aux);
    vtab->table = info->id;
    *out = &vtab->base;
    return SQLITE_OK;
}

int vtab_disconnect(sqlite3_vtab *vtab) {
    delete reinterpret_cast<ElfVtab *>(vtab);
    return SQLITE_OK;
}

constexpr int kIndexPathEq = 1;

int vtab_best_index(sqlite3_vtab *, sqlite3_index_info *info) {
    info->idxNum = 0;
    info->estimatedCost = 1e6;
    for (int i = 0; i < info->nConstraint; ++i) {
        const auto &c = info->aConstraint[i];
        if (!c.usable || c.iColumn != 0 || c.op != SQLITE_INDEX_CONSTRAINT_EQ) continue;
        const char *collation = sqlite3_vtab_collation(info, i);
        if (collation != nullptr && sqlite3_stricmp(collation, "BINARY") != 0) continue;
        info->aConstraintUsage[i].argvIndex = 1;
        info->aConstraintUsage[i].omit = 1;
        info->idxNum = kIndexPathEq;
        info->estimatedCost = 10;
        break;
    }
    return SQLITE_OK;
}

int cursor_open(sqlite3_vtab *, sqlite3_vtab_cursor **out) {
    auto *cursor = new ElfCursor;
    *out = &cursor->base;
    return SQLITE_OK;
}

int cursor_close(sqlite3_vtab_cursor *cur) {
    delete reinterpret_cast<ElfCursor *>(cur);
    return SQLITE_OK;
}

/// Loads batches until one has a row at `row` or the entries run out.
int settle(ElfCursor &cursor, const ElfVtab &vtab) {
    try {
        while (cursor.entry < cursor.entries.size()) {
            if (!cursor.batch) {
                cursor.batch = model::make_row_batch(vtab.table, *cursor.entries[cursor.entry]->object,
                                                     vtab.state->options);
                cursor.row = 0;
            }
            if (cursor.row < cursor.batch->size()) return SQLITE_OK;
            cursor.batch.reset();
            ++cursor.entry;
        }
    } catch (const std::exception &e) {
        sqlite3_free(cursor.base.pVtab->zErrMsg);
        cursor.base.pVtab->zErrMsg = sqlite3_mprintf("%s", e.what());
        return SQLITE_ERROR;
    }
    return SQLITE_OK;
}

int cursor_filter(sqlite3_vtab_cursor *cur, int idx_num, const char *, int argc, sqlite3_value **argv) {
    auto &cursor = *reinterpret_cast<ElfCursor *>(cur);
    const auto &vtab = *reinterpret_cast<const ElfVtab *>(cur->pVtab);
    cursor.entries.clear();
    cursor.batch.reset();
    cursor.entry = 0;
    cursor.row = 0;
    cursor.rowid = 0;
    const auto &catalog = vtab.state->catalog ? *vtab.state->catalog : empty_catalog();
    if (idx_num == kIndexPathEq && argc == 1) {
        if (sqlite3_value_type(argv[0]) == SQLITE_NULL) return SQLITE_OK;
        const auto *text = reinterpret_cast<const char *>(sqlite3_value_text(argv[0]));
        const int bytes = sqlite3_value_bytes(argv[0]);
        if (text == nullptr) return SQLITE_OK;
        if (const auto *entry = catalog.find(std::string_view(text, static_cast<std::size_t>(bytes)))) {
            cursor.entries.push_back(entry);
        }
    } else {
        for (const auto &e : catalog.entries()) cursor.entries.push_back(&e);
    }
    return settle(cursor, vtab);
}

int cursor_next(sqlite3_vtab_cursor *cur) {
    auto &cursor = *reinterpret_cast<ElfCursor *>(cur);
    ++cursor.row;
    ++cursor.rowid;
    return settle(cursor, *reinterpret_cast<const ElfVtab *>(cur->pVtab));
}

int cursor_eof(sqlite3_vtab_cursor *cur) {
    const auto &cursor = *reinterpret_cast<ElfCursor *>(cur);
    return cursor.entry >= cursor.entries.size() ? 1 : 0;
}

int cursor_column(sqlite3_vtab_cursor *cur, sqlite3_context *ctx, int column) {
    const auto &cursor = *reinterpret_cast<ElfCursor *>(cur);
    const model::Cell cell = cursor.batch->cell(cursor.row, static_cast<std::size_t>(column));
    std::visit(
        [ctx](const auto &v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                sqlite3_result_null(ctx);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                sqlite3_result_int64(ctx, v);
            } else if constexpr (std::is_same_v<T, std::string_view>) {
                sqlite3_result_text(ctx, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
            } else {
                sqlite3_result_blob64(ctx, v.data(), v.size(), SQLITE_TRANSIENT);
            }
        },
        cell);
    return SQLITE_OK;
}

int cursor_rowid(sqlite3_vtab_cursor *cur, sqlite3_int64 *rowid) {
    *rowid = reinterpret_cast<ElfCursor *>(cur)->rowid;
    return SQLITE_OK;
}

const sqlite3_module kModule = {
    /* iVersion */ 0,
    /* xCreate */ vtab_connect,
    /* xConnect */ vtab_connect,
    /* xBestIndex */ vtab_best_index,
    /* xDisconnect */ vtab_disconnect,
    /* xDestroy */ vtab_disconnect,
    /* xOpen */ cursor_open,
    /* xClose */ cursor_close,
    /* xFilter */ cursor_filter,
    /* xNext */ cursor_next,
    /* xEof */ cursor_eof,
    /* xColumn */ cursor_column,
    /* xRowid */ cursor_rowid,
    /* xUpdate */ nullptr,
    /* xBegin */ nullptr,
    /* xSync */ nullptr,
    /* xCommit */ nullptr,
    /* xRollback */ nullptr,
    /* xFindFunction */ nullptr,
    /* xRename */ nullptr,
    /* xSavepoint */ nullptr,
    /* xRelease */ nullptr,
    /* xRollbackTo */ nullptr,
    /* xShadowName */ nullptr,
};

int authorize(void *user, int action, const char *, const char *, const char *, const char *) {
    const auto *state = static_cast<const Session::State *>(user);
    if (state->internal) return SQLITE_OK;
    if (action == SQLITE_ATTACH || action == SQLITE_DETACH) return SQLITE_DENY;
    return SQLITE_OK;
}

class InternalScope {
public:
    explicit InternalScope(Session::State &state) : state_(state) { state_.internal = true; }
    ~InternalScope() { state_.internal = false; }
    InternalScope(const InternalScope &) = delete;
    InternalScope &operator=(const InternalScope &) = delete;

private:
    Session::State &state_;
};

void bind_value(sqlite3_stmt *stmt, int index, const Value &value) {
    std::visit(
        [&](const auto &v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                sqlite3_bind_null(stmt, index);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                sqlite3_bind_int64(stmt, index, v);
            } else if constexpr (std::is_same_v<T, double>) {
                sqlite3_bind_double(stmt, index, v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                sqlite3_bind_text64(stmt, index, v.data(), v.size(), SQLITE_TRANSIENT, SQLITE_UTF8);
            } else {
                sqlite3_bind_blob64(stmt, index, v.data(), v.size(), SQLITE_TRANSIENT);
            }
        },
        value);
}

Value column_value(sqlite3_stmt *stmt, int column) {
    switch (sqlite3_column_type(stmt, column)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, column));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, column);
    case SQLITE_TEXT: {
        const auto *text = reinterpret_cast<const char *>(sqlite3_column_text(stmt, column));
        return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, column)));
    }
    case SQLITE_BLOB: {
        const auto *data = static_cast<const std::uint8_t *>(sqlite3_column_blob(stmt, column));
        return std::vector<std::uint8_t>(data, data + sqlite3_column_bytes(stmt, column));
    }
    default: return std::monostate{};
    }
}

bool only_whitespace_or_comments(sqlite3 *db, const char *tail) {
    if (tail == nullptr || *tail == '\0') return true;
    sqlite3_stmt *raw = nullptr;
    const int rc = sqlite3_prepare_v2(db, tail, -1, &raw, nullptr);
    StmtPtr stmt(raw);
    return rc == SQLITE_OK && !stmt;
}

} // namespace

std::vector<TableStrategy> uniform_strategies(Strategy mode) {
    std::vector<TableStrategy> out;
    for (const auto &t : model::schema_tables()) out.push_back({std::string(t.name), mode});
    return out;
}

Session::Session(std::unique_ptr<State> state) : state_(std::move(state)) {}
Session::Session(Session &&) noexcept = default;
Session &Session::operator=(Session &&) noexcept = default;
Session::~Session() = default;

Session Session::open(std::shared_ptr<const corpus::CorpusCatalog> catalog,
                      const std::vector<TableStrategy> &strategies, model::RowOptions options) {
    auto state = std::make_unique<State>();
    state->catalog = catalog ? std::move(catalog) : std::make_shared<const corpus::CorpusCatalog>();
    state->options = options;
    for (const auto &t : model::schema_tables()) state->strategies[t.id] = Strategy::Lazy;
    for (const auto &s : strategies) {
        const auto *info = model::find_table(s.table_name);
        if (info == nullptr) throw Error("unknown table in strategy: " + s.table_name);
        state->strategies[info->id] = s.mode;
    }

    if (sqlite3_open_v2(":memory:", &state->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
        throw RegistrationFailure("cannot open in-memory database");
    }
    if (sqlite3_create_module_v2(state->db, kModuleName, &kModule, state.get(), nullptr) != SQLITE_OK) {
        throw RegistrationFailure(std::string("cannot register module: ") + sqlite3_errmsg(state->db));
    }
    sqlite3_set_authorizer(state->db, authorize, state.get());

    try {
        InternalScope scope(*state);
        state->exec("BEGIN");
        for (const auto &t : model::schema_tables()) {
            const std::string name = quote_identifier(t.name);
            const std::string vname = quote_identifier(virtual_name(t.name));
            state->exec("CREATE VIRTUAL TABLE " + vname + " USING " + kModuleName + "(" + std::string(t.name) + ")");
            if (state->strategies[t.id] == Strategy::Memoized) {
                state->exec("CREATE TABLE " + name + " AS SELECT * FROM " + vname);
                state->exec(path_index_sql({}, t));
            } else {
                state->exec("CREATE VIEW " + name + " AS SELECT * FROM " + vname);
            }
        }
        state->exec("COMMIT");
    } catch (const SqlError &e) {
        throw RegistrationFailure(e.what());
    }
    return Session(std::move(state));
}

Session Session::open_file(const fs::path &database) {
    std::error_code ec;
    if (!fs::is_regular_file(database, ec)) throw IoError("no such database file: " + database.string());
    auto state = std::make_unique<State>();
    if (sqlite3_open_v2(database.c_str(), &state->db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
        throw IoError("cannot open " + database.string() + ": " + sqlite3_errmsg(state->db));
    }
    state->internal = true;
    state->exec("PRAGMA mmap_size = 1073741824");
    state->internal = false;
    sqlite3_set_authorizer(state->db, authorize, state.get());
    for (const auto &t : model::schema_tables()) state->strategies[t.id] = Strategy::Memoized;
    return Session(std::move(state));
}

QueryResult Session::execute(std::string_view sql, const Params &params) {
    sqlite3 *db = state_->db;
    sqlite3_stmt *raw = nullptr;
    const char *tail = nullptr;
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, &tail) != SQLITE_OK) {
        throw SqlError(sqlite3_errmsg(db));
    }
    StmtPtr stmt(raw);
    if (!stmt) throw SqlError("empty statement");
    const std::string rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
    if (!only_whitespace_or_comments(db, rest.c_str())) throw SqlError("only a single statement is allowed");
    if (sqlite3_stmt_readonly(stmt.get()) == 0) throw WriteRejected("statement would modify the database");

    std::set<int> bound;
    for (const auto &[key, value] : params) {
        int index = 0;
        if (!key.empty() && (key[0] == ':' || key[0] == '@' || key[0] == '$')) {
            index = sqlite3_bind_parameter_index(stmt.get(), key.c_str());
        } else {
            for (const char prefix : {':', '@', '$'}) {
                index = sqlite3_bind_parameter_index(stmt.get(), (std::string(1, prefix) + key).c_str());
                if (index != 0) break;
            }
        }
        if (index == 0) throw SqlError("unknown parameter: " + key);
        bind_value(stmt.get(), index, value);
        bound.insert(index);
    }
    for (int i = 1; i <= sqlite3_bind_parameter_count(stmt.get()); ++i) {
        if (!bound.contains(i)) {
            const char *name = sqlite3_bind_parameter_name(stmt.get(), i);
            throw SqlError(std::string("parameter not bound: ") + (name != nullptr ? name : "?" + std::to_string(i)));
        }
    }

    QueryResult result;
    const int columns = sqlite3_column_count(stmt.get());
    for (int c = 0; c < columns; ++c) result.columns.emplace_back(sqlite3_column_name(stmt.get(), c));
    for (;;) {
        const int rc = sqlite3_step(stmt.get());
        if (rc == SQLITE_DONE) break;
        if (rc != SQLITE_ROW) throw SqlError(sqlite3_errmsg(db));
        Row row;
        row.reserve(static_cast<std::size_t>(columns));
        for (int c = 0; c < columns; ++c) row.push_back(column_value(stmt.get(), c));
        result.rows.push_back(std::move(row));
    }
    return result;
}

ExportSummary Session::export_database(const fs::path &dest, bool overwrite) {
    std::error_code ec;
    const fs::path target = fs::absolute(dest, ec);
    if (ec) throw IoError("invalid destination: " + dest.string());
    if (fs::exists(target, ec) && !overwrite) throw IoError(target.string() + " already exists");
    const fs::path dir = target.parent_path();
    if (!fs::is_directory(dir, ec)) throw IoError("destination directory does not exist: " + dir.string());
    if (::access(dir.c_str(), W_OK) != 0) throw IoError("destination directory not writable: " + dir.string());

    const fs::path tmp = dir / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove(tmp, ec);

    State &state = *state_;
    InternalScope scope(state);
    ExportSummary summary;
    bool attached = false;
    try {
        {
            sqlite3_stmt *raw = nullptr;
            const std::string attach = std::string("ATTACH DATABASE ? AS ") + kExportSchema;
            if (sqlite3_prepare_v2(state.db, attach.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
                throw SqlError(sqlite3_errmsg(state.db));
            }
            StmtPtr stmt(raw);
            sqlite3_bind_text(stmt.get(), 1, tmp.c_str(), -1, SQLITE_TRANSIENT);
            if (sqlite3_step(stmt.get()) != SQLITE_DONE) throw SqlError(sqlite3_errmsg(state.db));
            attached = true;
        }
        state.exec("BEGIN");
        for (const auto &t : model::schema_tables()) {
            const std::string name = quote_identifier(t.name);
            state.exec(std::string("CREATE TABLE ") + kExportSchema + "." + name + " AS SELECT * FROM main." + name);
            state.exec(path_index_sql(kExportSchema, t));
            summary.rows += static_cast<std::size_t>(
                state.scalar(std::string("SELECT COUNT(*) FROM ") + kExportSchema + "." + name));
            ++summary.tables;
        }
        state.exec("COMMIT");
        state.exec(std::string("DETACH DATABASE ") + kExportSchema);
        attached = false;
        fs::rename(tmp, target);
    } catch (const std::exception &e) {
        sqlite3_exec(state.db, "ROLLBACK", nullptr, nullptr, nullptr);
        if (attached) sqlite3_exec(state.db, (std::string("DETACH DATABASE ") + kExportSchema).c_str(), nullptr,
                                   nullptr, nullptr);
        fs::remove(tmp, ec);
        throw ExportAborted(std::string("export failed: ") + e.what());
    }
    return summary;
}

Strategy Session::strategy(TableId table) const { return state_->strategies.at(table); }

const corpus::CorpusCatalog &Session::catalog() const {
    return state_->catalog ? *state_->catalog : empty_catalog();
}

sqlite3 *Session::handle() const noexcept { return state_->db; }

std::string value_to_string(const Value &v) {
    return std::visit(
        [](const auto &x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "NULL";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                char buf[32];
                const auto res = std::to_chars(buf, buf + sizeof buf, x);
                return std::string(buf, res.ptr);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else {
                static constexpr char kHex[] = "0123456789abcdef";
                std::string out;
                out.reserve(x.size() * 2);
                for (const auto b : x) {
                    out += kHex[b >> 4];
                    out += kHex[b & 0xf];
                }
                return out;
            }
        },
        v);
}

} // namespace elfql::engine
