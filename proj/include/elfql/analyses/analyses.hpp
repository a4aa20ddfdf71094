#pragma once

#include "elfql/engine/session.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace elfql::analyses {

/// Ordered rows with column names.
struct AnalysisReport {
    std::vector<std::string> columns;
    std::vector<engine::Row> rows;

    bool empty() const noexcept { return rows.empty(); }
    bool operator==(const AnalysisReport &) const = default;
};

/// Exported names defined (outside .bss) by two or more dynamic symbol
/// tables. Columns: name, version, symbol_count, libraries (sorted paths
/// joined by ':'). Ordered by symbol_count desc, then name, then version.
AnalysisReport interposition_audit(engine::Session &session);

/// Imported symbols of `path` when `imported_only`; otherwise every entry of
/// .dynsym if present, else of .symtab. Throws UnknownPath.
std::int64_t count_symbols(engine::Session &session, const std::string &path, bool imported_only);

/// DT_RUNPATH (falling back to DT_RPATH) entries, split on ':'.
std::vector<std::string> runpath(engine::Session &session, const std::string &path);

/// 3 for an exported FUNC "PyInit_<module>", 2 for "init<module>" or
/// "_cffi_pypyinit_<module>", nullopt otherwise.
std::optional<int> python_extension_check(engine::Session &session, const std::string &path,
                                          const std::string &module_name);

struct SymbolDiff {
    /// name, demangle_name, type, size
    AnalysisReport added;
    /// name, demangle_name, type, size
    AnalysisReport removed;
    /// name, demangle_name, type, old_size, new_size
    AnalysisReport resized;

    bool empty() const noexcept { return added.empty() && removed.empty() && resized.empty(); }
};

/// Compares sized FUNC/OBJECT symbols of two files by (name, type).
SymbolDiff diff_symbols(engine::Session &session, const std::string &path_a, const std::string &path_b);

struct HistogramBuckets {
    enum class Kind { PowersOfTen, Linear };
    Kind kind = Kind::PowersOfTen;
    std::int64_t width = 0; // Linear only
};

struct SymbolHistogram {
    /// path, symbol_count; ordered by symbol_count desc, then path.
    AnalysisReport per_file;
    /// bucket_start, bucket_end (exclusive), files; ordered by bucket_start.
    AnalysisReport buckets;
};

/// Per-file symbol counts: entries of .dynsym if present, else of .symtab,
/// excluding the null symbol at index 0.
SymbolHistogram symbol_histogram(engine::Session &session, const HistogramBuckets &buckets = {});

} // namespace elfql::analyses
