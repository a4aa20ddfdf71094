#include "elfql/analyses/analyses.hpp"

#include "elfql/error.hpp"

#include <algorithm>

namespace elfql::analyses {

using engine::Params;
using engine::Session;
using engine::Value;

namespace {

AnalysisReport to_report(engine::QueryResult result) {
    return AnalysisReport{std::move(result.columns), std::move(result.rows)};
}

std::int64_t as_int(const Value &v) {
    if (const auto *i = std::get_if<std::int64_t>(&v)) return *i;
    return 0;
}

void require_path(Session &session, const std::string &path) {
    const auto r = session.execute("SELECT COUNT(*) FROM elf_headers WHERE path = :path", {{"path", path}});
    if (as_int(r.rows.at(0).at(0)) == 0) throw UnknownPath(path);
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

// The table whose entry count readelf reports for a file: .dynsym when present.
constexpr const char *kPrimaryTable = R"(
    CASE WHEN EXISTS (SELECT 1 FROM elf_sections sec WHERE sec.path = :path AND sec.type = 'DYNSYM')
         THEN '.dynsym' ELSE '.symtab' END)";

} // namespace

AnalysisReport interposition_audit(Session &session) {
    auto report = to_report(session.execute(R"(
        SELECT name, version,
               COUNT(*) AS symbol_count,
               GROUP_CONCAT(path, ':') AS libraries
        FROM elf_symbols
        WHERE exported = TRUE AND section != '.bss' AND "table" = '.dynsym'
        GROUP BY name, version
        HAVING COUNT(*) >= 2
        ORDER BY symbol_count DESC, name, version)"));
    // GROUP_CONCAT order is unspecified; sort the path list.
    for (auto &row : report.rows) {
        auto &libraries = std::get<std::string>(row.at(3));
        auto paths = split(libraries, ':');
        std::sort(paths.begin(), paths.end());
        libraries.clear();
        for (std::size_t i = 0; i < paths.size(); ++i) libraries += (i ? ":" : "") + paths[i];
    }
    return report;
}

std::int64_t count_symbols(Session &session, const std::string &path, bool imported_only) {
    require_path(session, path);
    if (imported_only) {
        const auto r = session.execute("SELECT COUNT(*) FROM elf_symbols WHERE path = :path AND imported = 1",
                                       {{"path", path}});
        return as_int(r.rows.at(0).at(0));
    }
    const auto r = session.execute(
        std::string(R"(SELECT COUNT(*) FROM elf_symbols WHERE path = :path AND "table" = )") + kPrimaryTable,
        {{"path", path}});
    return as_int(r.rows.at(0).at(0));
}

std::vector<std::string> runpath(Session &session, const std::string &path) {
    require_path(session, path);
    const Params params{{"path", path}};
    auto r = session.execute(R"(
        SELECT elf_strings.value
        FROM elf_dynamic_entries
        INNER JOIN elf_strings
            ON elf_dynamic_entries.value = elf_strings.offset
        WHERE elf_dynamic_entries.tag IN ('RUNPATH', 'RPATH')
          AND elf_dynamic_entries.path = :path
          AND elf_strings.path = :path
          AND elf_strings.section = '.dynstr'
        ORDER BY CASE elf_dynamic_entries.tag WHEN 'RUNPATH' THEN 0 ELSE 1 END,
                 elf_dynamic_entries.ordinal
        LIMIT 1)",
                             params);
    if (r.rows.empty()) {
        // Linkers may tail-merge .dynstr, leaving the value pointing inside
        // another string; read the bytes straight out of the section.
        r = session.execute(R"(
            SELECT SUBSTR(untrimmed, 1, INSTR(untrimmed, char(0)) - 1)
            FROM (
                SELECT CAST(SUBSTR(elf_sections.content, elf_dynamic_entries.value + 1) AS TEXT) AS untrimmed,
                       elf_dynamic_entries.tag AS tag, elf_dynamic_entries.ordinal AS ordinal
                FROM elf_sections, elf_dynamic_entries
                WHERE elf_dynamic_entries.tag IN ('RUNPATH', 'RPATH')
                  AND elf_dynamic_entries.path = :path
                  AND elf_sections.path = :path
                  AND elf_sections.name = '.dynstr')
            ORDER BY CASE tag WHEN 'RUNPATH' THEN 0 ELSE 1 END, ordinal
            LIMIT 1)",
                            params);
    }
    if (r.rows.empty()) return {};
    const auto *text = std::get_if<std::string>(&r.rows.front().front());
    if (text == nullptr || text->empty()) return {};
    return split(*text, ':');
}

std::optional<int> python_extension_check(Session &session, const std::string &path, const std::string &module_name) {
    require_path(session, path);
    const auto r = session.execute(R"(
        SELECT CASE name
               WHEN :init THEN 2
               WHEN :pyinit THEN 3
               WHEN :cffi THEN 2
               ELSE -1
               END AS python_version
        FROM elf_symbols
        WHERE path = :path
          AND name IN (:init, :pyinit, :cffi)
          AND exported = TRUE
          AND type = 'FUNC'
        ORDER BY python_version DESC
        LIMIT 1)",
                                   {{"path", path},
                                    {"init", "init" + module_name},
                                    {"pyinit", "PyInit_" + module_name},
                                    {"cffi", "_cffi_pypyinit_" + module_name}});
    if (r.rows.empty()) return std::nullopt;
    return static_cast<int>(as_int(r.rows.front().front()));
}

SymbolDiff diff_symbols(Session &session, const std::string &path_a, const std::string &path_b) {
    require_path(session, path_a);
    require_path(session, path_b);
    const Params params{{"a", path_a}, {"b", path_b}};
    static constexpr const char *kSides = R"(
        WITH a AS (SELECT DISTINCT name, demangle_name, type, size FROM elf_symbols
                   WHERE path = :a AND size != 0 AND (type = 'FUNC' OR type = 'OBJECT')),
             b AS (SELECT DISTINCT name, demangle_name, type, size FROM elf_symbols
                   WHERE path = :b AND size != 0 AND (type = 'FUNC' OR type = 'OBJECT')))";

    SymbolDiff diff;
    diff.added = to_report(session.execute(std::string(kSides) + R"(
        SELECT name, demangle_name, type, size FROM b
        WHERE NOT EXISTS (SELECT 1 FROM a WHERE a.name = b.name AND a.type = b.type)
        ORDER BY name, type, size)",
                                           params));
    diff.removed = to_report(session.execute(std::string(kSides) + R"(
        SELECT name, demangle_name, type, size FROM a
        WHERE NOT EXISTS (SELECT 1 FROM b WHERE b.name = a.name AND b.type = a.type)
        ORDER BY name, type, size)",
                                             params));
    diff.resized = to_report(session.execute(std::string(kSides) + R"(
        SELECT a.name, a.demangle_name, a.type, a.size AS old_size, b.size AS new_size
        FROM a JOIN b ON a.name = b.name AND a.type = b.type
        WHERE a.size != b.size
          AND NOT EXISTS (SELECT 1 FROM b b2 WHERE b2.name = a.name AND b2.type = a.type AND b2.size = a.size)
          AND NOT EXISTS (SELECT 1 FROM a a2 WHERE a2.name = b.name AND a2.type = b.type AND a2.size = b.size)
        ORDER BY a.name, a.type, old_size, new_size)",
                                             params));
    return diff;
}

SymbolHistogram symbol_histogram(Session &session, const HistogramBuckets &buckets) {
    SymbolHistogram out;
    out.per_file = to_report(session.execute(R"(
        SELECT h.path AS path,
               (SELECT COUNT(*) FROM elf_symbols s
                WHERE s.path = h.path AND s."index" > 0
                  AND s."table" = CASE WHEN EXISTS (SELECT 1 FROM elf_sections sec
                                                    WHERE sec.path = h.path AND sec.type = 'DYNSYM')
                                       THEN '.dynsym' ELSE '.symtab' END) AS symbol_count
        FROM elf_headers h
        ORDER BY symbol_count DESC, h.path)"));
    out.buckets.columns = {"bucket_start", "bucket_end", "files"};
    if (out.per_file.rows.empty()) return out;

    auto bucket_of = [&](std::int64_t count) -> std::pair<std::int64_t, std::int64_t> {
        if (buckets.kind == HistogramBuckets::Kind::Linear && buckets.width > 0) {
            const std::int64_t start = count / buckets.width * buckets.width;
            return {start, start + buckets.width};
        }
        if (count == 0) return {0, 1};
        std::int64_t start = 1;
        while (start <= count / 10) start *= 10;
        return {start, start * 10};
    };
    auto next_bucket = [&](std::pair<std::int64_t, std::int64_t> b) { return bucket_of(b.second); };

    std::vector<std::int64_t> counts;
    for (const auto &row : out.per_file.rows) counts.push_back(as_int(row.at(1)));
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    const auto last = bucket_of(*hi);
    for (auto b = bucket_of(*lo);; b = next_bucket(b)) {
        const auto files = std::count_if(counts.begin(), counts.end(), [&](std::int64_t c) { return bucket_of(c) == b; });
        out.buckets.rows.push_back({b.first, b.second, static_cast<std::int64_t>(files)});
        if (b == last) break;
    }
    return out;
}

} // namespace elfql::analyses
