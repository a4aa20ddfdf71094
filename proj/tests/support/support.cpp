#include "support.hpp"

#include "elfql/elf/reader.hpp"
#include "elfql/model/schema.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace elfql::test {

TempDir::TempDir(std::string_view prefix) {
    const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    static int counter = 0;
    std::ostringstream name;
    name << prefix << "_" << ::getpid() << "_" << now << "_" << counter++;
    path = fs::temp_directory_path() / name.str();
    fs::create_directories(path);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
}

fs::path fixture_dir() { return ELFQL_FIXTURE_DIR; }
fs::path data_dir() { return ELFQL_DATA_DIR; }
fs::path cli_path() { return ELFQL_CLI_PATH; }
fs::path fixture(std::string_view relative) { return fixture_dir() / relative; }

void write_bytes(const fs::path &path, const std::vector<std::uint8_t> &bytes) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string write_elf(const fs::path &path, const bench::ElfImageSpec &spec) {
    write_bytes(path, bench::build_elf(spec));
    return fs::canonical(path).string();
}

CommandResult run_command(const std::string &command) {
    CommandResult result;
    FILE *pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) return result;
    std::array<char, 4096> buf{};
    while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) result.output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string shell_quote(const std::string &s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

bool have_program(const std::string &name) {
    return run_command("command -v " + shell_quote(name) + " >/dev/null 2>&1").status == 0;
}

std::map<std::string, std::int64_t> readelf_symbol_counts(const std::string &path) {
    const auto r = run_command("readelf -sW " + shell_quote(path) + " 2>/dev/null");
    static const std::regex header(R"(Symbol table '([^']+)' contains (\d+) entr)");
    std::map<std::string, std::int64_t> out;
    std::istringstream lines(r.output);
    std::string line;
    std::smatch m;
    while (std::getline(lines, line)) {
        if (std::regex_search(line, m, header)) out[m[1]] = std::stoll(m[2]);
    }
    return out;
}

std::vector<ReadelfSymbol> readelf_symbols(const std::string &path) {
    const auto r = run_command("readelf -sW " + shell_quote(path) + " 2>/dev/null");
    static const std::regex header(R"(Symbol table '([^']+)' contains)");
    static const std::regex row(R"(^\s*(\d+):\s+[0-9a-f]+\s+\S+\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s*(.*)$)");
    std::vector<ReadelfSymbol> out;
    std::istringstream lines(r.output);
    std::string line, table;
    std::smatch m;
    while (std::getline(lines, line)) {
        if (std::regex_search(line, m, header)) {
            table = m[1];
        } else if (!table.empty() && std::regex_match(line, m, row)) {
            ReadelfSymbol s;
            s.table = table;
            s.index = std::stoll(m[1]);
            s.type = m[2];
            s.bind = m[3];
            s.visibility = m[4];
            s.ndx = m[5];
            s.name = m[6];
            // readelf decorates .dynsym names with "@VER", "@@VER" and " (3)".
            // In .symtab an '@' is part of the stored name.
            if (table == ".dynsym") {
                if (const auto paren = s.name.find(" ("); paren != std::string::npos) s.name.erase(paren);
                if (const auto at = s.name.find('@'); at != std::string::npos) s.name.erase(at);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

engine::Session open_session(const std::vector<std::string> &paths, engine::Strategy mode) {
    std::vector<fs::path> p(paths.begin(), paths.end());
    auto added = corpus::add_paths(p);
    return open_session(std::make_shared<const corpus::CorpusCatalog>(std::move(added.catalog)), mode);
}

engine::Session open_session(std::shared_ptr<const corpus::CorpusCatalog> catalog, engine::Strategy mode) {
    return engine::Session::open(std::move(catalog), engine::uniform_strategies(mode));
}

std::int64_t scalar(engine::Session &session, const std::string &sql, const engine::Params &params) {
    const auto r = session.execute(sql, params);
    return std::get<std::int64_t>(r.rows.at(0).at(0));
}

std::vector<std::string> render_rows(const engine::QueryResult &result) {
    std::vector<std::string> out;
    for (const auto &row : result.rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) line += " | ";
            line += engine::value_to_string(row[i]);
        }
        out.push_back(std::move(line));
    }
    return out;
}

std::vector<std::string> system_elf_files(std::size_t limit) {
    static const char *const candidates[] = {
        "/usr/bin/ls", "/usr/bin/cat", "/usr/bin/bash", "/usr/bin/env", "/usr/bin/readelf", "/usr/bin/objdump",
        "/usr/bin/cmake", "/usr/bin/git", "/usr/bin/python3", "/usr/bin/gcc", "/usr/bin/tar", "/usr/bin/grep",
        "/usr/lib/x86_64-linux-gnu/libc.so.6", "/usr/lib/x86_64-linux-gnu/libm.so.6",
        "/usr/lib/x86_64-linux-gnu/libstdc++.so.6", "/usr/lib/x86_64-linux-gnu/libsqlite3.so.0",
        "/usr/lib/x86_64-linux-gnu/ld-linux-x86-64.so.2", "/usr/lib/x86_64-linux-gnu/libz.so.1",
        "/usr/lib/x86_64-linux-gnu/libgcc_s.so.1", "/usr/lib/x86_64-linux-gnu/libcrypto.so.3",
        "/usr/lib/x86_64-linux-gnu/crt1.o", "/usr/lib/x86_64-linux-gnu/libc_nonshared.a",
    };
    std::vector<std::string> out;
    for (const char *c : candidates) {
        if (out.size() >= limit) break;
        std::error_code ec;
        if (!fs::is_regular_file(c, ec)) continue;
        try {
            (void)elf::open_elf_file(c);
            out.push_back(fs::canonical(c).string());
        } catch (const std::exception &) {
        }
    }
    return out;
}

} // namespace elfql::test

namespace elfql::test {

bench::ElfImageSpec ruby_like_spec() {
    using bench::Placement;
    using elf::SymbolBinding;
    using elf::SymbolType;
    auto import = [](std::string name, SymbolType type = SymbolType::Func, SymbolBinding bind = SymbolBinding::Global,
                     std::string version = {}) {
        bench::SymbolSpec s;
        s.name = std::move(name);
        s.type = type;
        s.binding = bind;
        s.placement = Placement::Undefined;
        s.size = 0;
        if (!version.empty()) {
            s.version = std::move(version);
            s.version_file = "libc.so.6";
        }
        return s;
    };

    bench::ElfImageSpec spec;
    spec.needed = {"libruby-3.0.so.3.0", "libc.so.6"};
    spec.dynamic_symbols = {
        import("ruby_run_node"),
        import("__gmon_start__", SymbolType::NoType, SymbolBinding::Weak),
        import("ruby_init"),
        import("ruby_options"),
        import("_ITM_deregisterTMCloneTable", SymbolType::NoType, SymbolBinding::Weak),
        import("_ITM_registerTMCloneTable", SymbolType::NoType, SymbolBinding::Weak),
        import("ruby_sysinit"),
        import("ruby_init_stack"),
        import("__libc_start_main", SymbolType::Func, SymbolBinding::Global, "GLIBC_2.34"),
        import("__cxa_finalize", SymbolType::Func, SymbolBinding::Weak, "GLIBC_2.2.5"),
        import("setlocale", SymbolType::Func, SymbolBinding::Global, "GLIBC_2.2.5"),
        import("__stack_chk_fail", SymbolType::Func, SymbolBinding::Global, "GLIBC_2.4"),
        import("ruby_cleanup"),
        import("ruby_executable_node"),
        import("ruby_process_options"),
        import("ruby_set_argv"),
        import("ruby_show_version"),
        import("rb_eval_string"),
        import("ruby_script"),
    };
    bench::SymbolSpec stdin_used;
    stdin_used.name = "_IO_stdin_used";
    stdin_used.type = SymbolType::Object;
    stdin_used.placement = Placement::Data;
    stdin_used.size = 4;
    spec.dynamic_symbols.push_back(stdin_used);

    bench::SymbolSpec environ_copy;
    environ_copy.name = "environ";
    environ_copy.type = SymbolType::Object;
    environ_copy.binding = SymbolBinding::Weak;
    environ_copy.placement = Placement::Bss;
    environ_copy.size = 8;
    environ_copy.version = "GLIBC_2.2.5";
    environ_copy.version_file = "libc.so.6";
    spec.dynamic_symbols.push_back(environ_copy);
    return spec;
}

namespace {

using bench::Placement;

struct Layout {
    elf::ElfClass elf_class;
    elf::DataEncoding encoding;
    elf::Machine machine;
};

constexpr Layout kLayouts[] = {
    {elf::ElfClass::Elf64, elf::DataEncoding::Lsb, elf::Machine::X86_64},
    {elf::ElfClass::Elf32, elf::DataEncoding::Lsb, elf::Machine::I386},
    {elf::ElfClass::Elf32, elf::DataEncoding::Msb, elf::Machine::Mips},
    {elf::ElfClass::Elf64, elf::DataEncoding::Msb, elf::Machine::PowerPc64},
};

template <typename T> const T &pick(std::mt19937_64 &rng, std::initializer_list<T> items) {
    std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
    return *(items.begin() + d(rng));
}

std::string random_name(std::mt19937_64 &rng, int serial) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_0123456789";
    std::uniform_int_distribution<int> len(1, 24);
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
    std::string base;
    for (int i = len(rng); i > 0; --i) base += alphabet[ch(rng)];
    // Mangled names exercise the demangler; the serial keeps names unique.
    if (rng() % 5 == 0) return "_Z" + std::to_string(base.size() + 1 + std::to_string(serial).size()) + "f" + base +
                               std::to_string(serial) + "v";
    return "s" + std::to_string(serial) + "_" + base;
}

bench::SymbolSpec random_symbol(std::mt19937_64 &rng, int serial, bool dynamic) {
    bench::SymbolSpec s;
    s.name = random_name(rng, serial);
    s.placement = pick(rng, {Placement::Text, Placement::Text, Placement::Data, Placement::Bss, Placement::Undefined,
                             Placement::Absolute});
    s.type = s.placement == Placement::Text
                 ? pick(rng, {elf::SymbolType::Func, elf::SymbolType::GnuIfunc, elf::SymbolType::NoType})
                 : pick(rng, {elf::SymbolType::Object, elf::SymbolType::Tls, elf::SymbolType::NoType,
                              elf::SymbolType::Func});
    s.binding = pick(rng, {elf::SymbolBinding::Global, elf::SymbolBinding::Global, elf::SymbolBinding::Weak,
                           elf::SymbolBinding::Local});
    if (s.placement == Placement::Undefined && s.binding == elf::SymbolBinding::Local) {
        s.binding = elf::SymbolBinding::Global;
    }
    s.visibility = pick(rng, {elf::SymbolVisibility::Default, elf::SymbolVisibility::Default,
                              elf::SymbolVisibility::Hidden, elf::SymbolVisibility::Protected});
    s.size = std::uniform_int_distribution<std::uint64_t>(0, 40)(rng);
    if (dynamic && s.binding != elf::SymbolBinding::Local && rng() % 3 == 0) {
        if (s.placement == Placement::Undefined) {
            s.version = pick<std::string>(rng, {"GLIBC_2.2.5", "GLIBC_2.34"});
            s.version_file = "libc.so.6";
        } else {
            s.version = pick<std::string>(rng, {"V1", "V2"});
            s.hidden_version = rng() % 2 == 0;
        }
    }
    return s;
}

} // namespace

bench::ElfImageSpec random_elf_spec(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto &layout = kLayouts[seed % std::size(kLayouts)];
    bench::ElfImageSpec spec;
    spec.elf_class = layout.elf_class;
    spec.encoding = layout.encoding;
    spec.machine = layout.machine;
    spec.dynamic = rng() % 6 != 0;
    spec.symtab = !spec.dynamic || rng() % 2 == 0;
    spec.file_type = spec.dynamic ? elf::FileType::Dyn : pick(rng, {elf::FileType::Exec, elf::FileType::Rel});
    if (rng() % 2) spec.soname = "librand" + std::to_string(seed) + ".so";
    if (rng() % 3 == 0) spec.runpath = "$ORIGIN/a:/b";
    if (rng() % 3 == 0) spec.rpath = "/r";
    for (int i = static_cast<int>(rng() % 3); i > 0; --i) spec.needed.push_back("libdep" + std::to_string(i) + ".so");
    int serial = 0;
    for (int i = static_cast<int>(rng() % 60); i > 0; --i) {
        spec.dynamic_symbols.push_back(random_symbol(rng, serial++, true));
    }
    for (int i = static_cast<int>(rng() % 60); i > 0; --i) {
        spec.static_symbols.push_back(random_symbol(rng, serial++, false));
    }
    return spec;
}

std::string random_ordered_query(std::mt19937_64 &rng) {
    const auto tables = model::schema_tables();
    const auto &t = tables[rng() % tables.size()];
    std::vector<std::string> cols;
    for (const auto &c : t.columns) cols.push_back("\"" + std::string(c.name) + "\"");
    std::string where;
    switch (rng() % 4) {
    case 0:
        break;
    case 1:
        where = " WHERE " + cols[rng() % cols.size()] + " IS NOT NULL";
        break;
    case 2:
        where = " WHERE path LIKE '%rand_" + std::to_string(rng() % 10) + "%'";
        break;
    default:
        for (const auto &c : t.columns) {
            if (c.type == model::ColumnType::Integer) {
                where = " WHERE \"" + std::string(c.name) + "\" % 3 = " + std::to_string(rng() % 3);
                break;
            }
        }
    }
    std::string order;
    for (std::size_t i = 0; i < cols.size(); ++i) order += (i ? ", " : "") + cols[i];
    if (rng() % 3 == 0) {
        return "SELECT path, COUNT(*) FROM " + std::string(t.name) + where + " GROUP BY path ORDER BY path";
    }
    return "SELECT * FROM " + std::string(t.name) + where + " ORDER BY " + order;
}

} // namespace elfql::test
