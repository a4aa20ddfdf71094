#include "elfql/cli/cli.hpp"

#include "elfql/analyses/analyses.hpp"
#include "elfql/bench/bench.hpp"
#include "elfql/cli/format.hpp"
#include "elfql/corpus/catalog.hpp"
#include "elfql/engine/session.hpp"
#include "elfql/error.hpp"

#include <CLI11.hpp>
#include <sqlite3.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace elfql::cli {
namespace fs = std::filesystem;

namespace {

/// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorpusFlags {
    std::vector<std::string> paths;
    bool recursive = false;
    bool env_search_path = false;
    std::vector<std::string> memoize{"none"};

    void attach(CLI::App &cmd, bool with_memoize = true) {
        cmd.add_option("paths", paths, "ELF files or directories")->required();
        cmd.add_flag("--recursive,-r", recursive, "Add shared-library dependencies of every file");
        cmd.add_flag("--env-search-path", env_search_path, "Search LD_LIBRARY_PATH when resolving dependencies");
        if (with_memoize) {
            cmd.add_option("--memoize", memoize, "none, all, or table names to materialize")
                ->delimiter(',')
                ->default_str("none");
        }
    }
};

struct FormatFlag {
    std::string name = "table";

    void attach(CLI::App &cmd) {
        cmd.add_option("--format,-f", name, "table, csv or json")
            ->check(CLI::IsMember({"table", "csv", "json"}))
            ->default_str("table");
    }
    OutputFormat value() const { return *parse_format(name); }
};

std::vector<engine::TableStrategy> strategies_for(const std::vector<std::string> &memoize) {
    if (memoize.empty() || (memoize.size() == 1 && memoize[0] == "none")) {
        return engine::uniform_strategies(engine::Strategy::Lazy);
    }
    if (memoize.size() == 1 && memoize[0] == "all") return engine::uniform_strategies(engine::Strategy::Memoized);
    std::vector<engine::TableStrategy> out = engine::uniform_strategies(engine::Strategy::Lazy);
    for (const auto &name : memoize) {
        const auto *info = model::find_table(name);
        if (info == nullptr) throw UsageError("--memoize: unknown table '" + name + "'");
        for (auto &s : out) {
            if (s.table_name == info->name) s.mode = engine::Strategy::Memoized;
        }
    }
    return out;
}

engine::Session open_session(const CorpusFlags &flags, std::ostream &err) {
    const auto strategies = strategies_for(flags.memoize);
    std::vector<fs::path> paths(flags.paths.begin(), flags.paths.end());
    auto added = corpus::add_paths(paths);
    for (const auto &f : added.failures) err << "warning: " << f.path << ": " << f.message << "\n";
    corpus::CorpusCatalog catalog = std::move(added.catalog);
    if (flags.recursive) {
        corpus::SearchConfig config;
        if (flags.env_search_path) config = corpus::SearchConfig::from_environment();
        auto resolved = corpus::resolve_recursive(catalog, config);
        for (const auto &u : resolved.unresolved) {
            err << "warning: " << u.dependent << ": cannot resolve dependency " << u.soname << "\n";
        }
        for (const auto &f : resolved.failures) err << "warning: " << f.path << ": " << f.message << "\n";
        catalog = std::move(resolved.catalog);
    }
    return engine::Session::open(std::make_shared<const corpus::CorpusCatalog>(std::move(catalog)), strategies);
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

engine::QueryResult to_result(const analyses::AnalysisReport &report) { return {report.columns, report.rows}; }

engine::QueryResult diff_result(const analyses::SymbolDiff &diff) {
    engine::QueryResult r;
    r.columns = {"change", "name", "demangle_name", "type", "old_size", "new_size"};
    for (const auto &row : diff.added.rows) r.rows.push_back({"added", row[0], row[1], row[2], {}, row[3]});
    for (const auto &row : diff.removed.rows) r.rows.push_back({"removed", row[0], row[1], row[2], row[3], {}});
    for (const auto &row : diff.resized.rows) r.rows.push_back({"resized", row[0], row[1], row[2], row[3], row[4]});
    return r;
}

std::string schema_text(const model::TableInfo &t) {
    std::string out = "CREATE TABLE " + std::string(t.name) + " (";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        const auto &c = t.columns[i];
        if (i > 0) out += ", ";
        out += '"' + std::string(c.name) + "\" ";
        out += c.type == model::ColumnType::Integer ? "INTEGER" : (c.type == model::ColumnType::Text ? "TEXT" : "BLOB");
    }
    return out + ");\n";
}

bool blank(const std::string &s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

/// Returns true when the loop should stop.
bool meta_command(const std::string &line, OutputFormat &format, Streams &io) {
    std::istringstream words(line);
    std::string cmd, arg;
    words >> cmd >> arg;
    if (cmd == ".quit" || cmd == ".exit") return true;
    if (cmd == ".tables") {
        for (const auto &t : model::schema_tables()) io.out << t.name << "\n";
    } else if (cmd == ".schema") {
        bool any = false;
        for (const auto &t : model::schema_tables()) {
            if (!arg.empty() && model::find_table(arg) != &t) continue;
            io.out << schema_text(t);
            any = true;
        }
        if (!any) io.err << "Error: no such table: " << arg << "\n";
    } else if (cmd == ".mode") {
        if (const auto f = parse_format(arg)) format = *f;
        else io.err << "Error: mode should be one of: table csv json\n";
    } else if (cmd == ".help") {
        io.out << ".tables           list tables\n"
                  ".schema [TABLE]   show table columns\n"
                  ".mode table|csv|json\n"
                  ".quit             exit\n";
    } else {
        io.err << "Error: unknown command: " << cmd << "\n";
    }
    return false;
}

int repl(engine::Session &session, Streams &io) {
    OutputFormat format = OutputFormat::Table;
    std::string pending;
    std::string line;
    for (;;) {
        if (io.interactive) io.out << (pending.empty() ? "elfql> " : "  ...> ") << std::flush;
        if (!std::getline(io.in, line)) break;
        if (pending.empty() && !line.empty() && line.find_first_not_of(" \t") != std::string::npos &&
            line[line.find_first_not_of(" \t")] == '.') {
            if (meta_command(line.substr(line.find_first_not_of(" \t")), format, io)) return kExitOk;
            continue;
        }
        pending += line;
        pending += '\n';
        if (blank(pending)) {
            pending.clear();
            continue;
        }
        if (sqlite3_complete(pending.c_str()) == 0) continue;
        try {
            io.out << format_result(session.execute(pending), format);
        } catch (const Error &e) {
            io.err << "Error: " << e.what() << "\n";
        }
        pending.clear();
    }
    if (!blank(pending)) {
        io.err << "Error: incomplete SQL statement at end of input\n";
        return kExitRuntime;
    }
    return kExitOk;
}

std::vector<std::uint64_t> parse_counts(const std::vector<std::string> &texts) {
    std::vector<std::uint64_t> out;
    for (const auto &t : texts) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(t, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != t.size() || t.empty() || t[0] == '-') throw UsageError("--counts: not a count: '" + t + "'");
        out.push_back(v);
    }
    return out;
}

} // namespace

int run(const std::vector<std::string> &args, Streams io) {
    CLI::App app{"SQL queries over ELF files", args.empty() ? "elfql" : args[0]};
    app.require_subcommand(1);
    app.set_version_flag("--version", "elfql 0.1.0");

    CorpusFlags query_corpus;
    FormatFlag query_format;
    std::string sql, sql_file;
    auto *query = app.add_subcommand("query", "Run one SQL statement");
    query_corpus.attach(*query);
    query_format.attach(*query);
    auto *sql_opt = query->add_option("--sql", sql, "SQL text");
    auto *sql_file_opt = query->add_option("--sql-file", sql_file, "File holding the SQL statement");
    sql_opt->excludes(sql_file_opt);

    CorpusFlags repl_corpus;
    auto *repl_cmd = app.add_subcommand("repl", "Interactive SQL shell");
    repl_corpus.attach(*repl_cmd);

    CorpusFlags export_corpus;
    std::string out_path;
    bool force = false;
    auto *export_cmd = app.add_subcommand("export", "Write the data model to a SQLite database file");
    export_corpus.attach(*export_cmd, false);
    export_cmd->add_option("--out,-o", out_path, "Destination database file")->required();
    export_cmd->add_flag("--force", force, "Overwrite an existing file");

    CorpusFlags audit_corpus;
    FormatFlag audit_format;
    auto *audit = app.add_subcommand("audit", "Exported names defined by more than one library");
    audit_corpus.attach(*audit);
    audit_format.attach(*audit);

    CorpusFlags diff_corpus;
    FormatFlag diff_format;
    auto *diff = app.add_subcommand("diff", "Symbol-level differences between two files");
    diff_corpus.attach(*diff);
    diff_format.attach(*diff);

    CorpusFlags hist_corpus;
    FormatFlag hist_format;
    std::int64_t linear_width = 0;
    bool per_file = false;
    auto *hist = app.add_subcommand("histogram", "Distribution of per-file symbol counts");
    hist_corpus.attach(*hist);
    hist_format.attach(*hist);
    hist->add_option("--linear", linear_width, "Fixed bucket width instead of powers of ten")
        ->check(CLI::PositiveNumber);
    hist->add_flag("--per-file", per_file, "Print per-file counts instead of buckets");

    std::uint64_t gen_symbols = 0;
    std::string gen_out, gen_pattern = "sym_{index:08}", gen_manifest;
    auto *generate = app.add_subcommand("generate", "Write a synthetic shared object with N symbols");
    generate->add_option("--symbols,-n", gen_symbols, "Number of exported functions")->required();
    generate->add_option("--out,-o", gen_out, "Destination file")->required();
    generate->add_option("--pattern", gen_pattern, "Name template with an {index} field")
        ->default_str("sym_{index:08}");
    generate->add_option("--manifest", gen_manifest, "Also write the symbol names, one per line");

    std::vector<std::string> bench_counts{"100", "1000", "10000", "100000"};
    std::vector<std::string> bench_pipelines;
    int bench_reps = 5;
    std::string bench_csv, bench_plot, bench_work;
    auto *bench_cmd = app.add_subcommand("bench", "Time symbol counting on synthetic files");
    bench_cmd->add_option("--counts", bench_counts, "Symbol counts")->delimiter(',')->default_str("100,1000,10000,100000");
    bench_cmd->add_option("--pipeline", bench_pipelines,
                          "FRESH_PARSE_QUERY, MEMOIZED_DB_QUERY or EXTERNAL_READELF_WC (default: all)")
        ->delimiter(',');
    bench_cmd->add_option("--reps", bench_reps, "Repetitions per measurement (at least 3)")->default_str("5");
    bench_cmd->add_option("--csv", bench_csv, "CSV output file (default: standard output)");
    bench_cmd->add_option("--plot-data", bench_plot, "Whitespace-separated plot data file");
    bench_cmd->add_option("--work-dir", bench_work, "Cache directory for generated files");

    std::vector<const char *> argv;
    argv.reserve(args.size());
    for (const auto &a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (query->parsed() && sql_opt->count() + sql_file_opt->count() != 1) {
            throw UsageError("query: exactly one of --sql or --sql-file is required");
        }
        if (diff->parsed() && diff_corpus.paths.size() != 2) throw UsageError("diff: expected exactly two paths");
        if (generate->parsed()) {
            try {
                bench::format_symbol_name(gen_pattern, 0);
            } catch (const std::exception &e) {
                throw UsageError("--pattern: " + std::string(e.what()));
            }
        }
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, io.out, io.err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, io.out, io.err);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e, io.out, io.err);
    } catch (const CLI::ParseError &e) {
        io.err << "error: " << e.what() << "\nRun with --help for more information.\n";
        return kExitUsage;
    } catch (const UsageError &e) {
        io.err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (query->parsed()) {
            const std::string text = sql_file.empty() ? sql : read_file(sql_file);
            auto session = open_session(query_corpus, io.err);
            io.out << format_result(session.execute(text), query_format.value());
        } else if (repl_cmd->parsed()) {
            auto session = open_session(repl_corpus, io.err);
            return repl(session, io);
        } else if (export_cmd->parsed()) {
            auto session = open_session(export_corpus, io.err);
            const auto summary = session.export_database(out_path, force);
            io.out << "exported " << summary.tables << " tables, " << summary.rows << " rows to " << out_path << "\n";
        } else if (audit->parsed()) {
            auto session = open_session(audit_corpus, io.err);
            io.out << format_result(to_result(analyses::interposition_audit(session)), audit_format.value());
        } else if (diff->parsed()) {
            auto session = open_session(diff_corpus, io.err);
            // Paths in the catalog are canonical; map the arguments the same way.
            auto canonical = [&](const std::string &p) {
                std::error_code ec;
                auto c = fs::canonical(p, ec);
                return ec ? p : c.string();
            };
            const std::string a = canonical(diff_corpus.paths[0]);
            const std::string b = canonical(diff_corpus.paths[1]);
            const auto result = analyses::diff_symbols(session, a, b);
            if (result.empty() && diff_format.value() == OutputFormat::Table) {
                io.out << "no differences\n";
            } else {
                if (result.empty()) io.err << "no differences\n";
                io.out << format_result(diff_result(result), diff_format.value());
            }
        } else if (hist->parsed()) {
            auto session = open_session(hist_corpus, io.err);
            analyses::HistogramBuckets buckets;
            if (linear_width > 0) {
                buckets.kind = analyses::HistogramBuckets::Kind::Linear;
                buckets.width = linear_width;
            }
            const auto h = analyses::symbol_histogram(session, buckets);
            io.out << format_result(to_result(per_file ? h.per_file : h.buckets), hist_format.value());
        } else if (generate->parsed()) {
            bench::GeneratedElfSpec spec;
            spec.symbol_count = gen_symbols;
            spec.name_pattern = gen_pattern;
            const auto names = bench::generate_elf(spec, gen_out);
            if (!gen_manifest.empty()) {
                std::ofstream m(gen_manifest, std::ios::trunc);
                for (const auto &n : names) m << n << "\n";
                if (!m) throw IoError("cannot write " + gen_manifest);
            }
            io.out << "wrote " << gen_out << " with " << names.size() << " symbols\n";
        } else if (bench_cmd->parsed()) {
            bench::BenchOptions options;
            options.counts = parse_counts(bench_counts);
            if (!bench_pipelines.empty()) {
                options.pipelines.clear();
                for (const auto &p : bench_pipelines) {
                    const auto parsed = bench::parse_pipeline(p);
                    if (!parsed) throw UsageError("--pipeline: unknown pipeline '" + p + "'");
                    options.pipelines.push_back(*parsed);
                }
            }
            options.repetitions = bench_reps;
            options.work_dir = bench_work;
            const auto results = bench::run_benchmark(options);
            for (const auto &r : results) {
                if (!r.ok()) {
                    io.err << (r.skipped ? "notice: " : "error: ") << bench::to_string(r.pipeline) << " at "
                           << r.symbols << " symbols: " << r.note << "\n";
                }
            }
            const std::string csv = bench::to_csv(results);
            if (bench_csv.empty()) {
                io.out << csv;
            } else {
                std::ofstream f(bench_csv, std::ios::trunc);
                f << csv;
                if (!f) throw IoError("cannot write " + bench_csv);
            }
            if (!bench_plot.empty()) {
                std::ofstream f(bench_plot, std::ios::trunc);
                f << bench::to_plot_data(results);
                if (!f) throw IoError("cannot write " + bench_plot);
            }
        }
    } catch (const UsageError &e) {
        io.err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        io.err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace elfql::cli
