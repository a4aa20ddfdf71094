#pragma once

#include "elfql/bench/elf_writer.hpp"
#include "elfql/corpus/catalog.hpp"
#include "elfql/engine/session.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace elfql::test {
namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    explicit TempDir(std::string_view prefix = "elfql");
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    fs::path operator/(std::string_view name) const { return path / name; }
};

/// Built fixtures (compiled by the test build) and checked-in data.
fs::path fixture_dir();
fs::path data_dir();
/// The built command-line executable.
fs::path cli_path();
fs::path fixture(std::string_view relative);

void write_bytes(const fs::path &path, const std::vector<std::uint8_t> &bytes);
std::vector<std::uint8_t> read_bytes(const fs::path &path);
/// Writes build_elf(spec) and returns the canonical path.
std::string write_elf(const fs::path &path, const bench::ElfImageSpec &spec);

struct CommandResult {
    int status = -1;
    std::string output;
};

/// Runs through /bin/sh and captures standard output.
CommandResult run_command(const std::string &command);
std::string shell_quote(const std::string &s);
bool have_program(const std::string &name);

/// "Symbol table '<name>' contains N entries" lines of `readelf -sW`.
std::map<std::string, std::int64_t> readelf_symbol_counts(const std::string &path);

/// One row per symbol printed by `readelf -sW`.
struct ReadelfSymbol {
    std::string table;
    std::int64_t index = 0;
    std::string type;
    std::string bind;
    std::string visibility;
    std::string ndx;
    std::string name; // version suffix stripped
};
std::vector<ReadelfSymbol> readelf_symbols(const std::string &path);

/// Opens a session over explicit paths with the given strategy.
engine::Session open_session(const std::vector<std::string> &paths,
                             engine::Strategy mode = engine::Strategy::Lazy);
engine::Session open_session(std::shared_ptr<const corpus::CorpusCatalog> catalog,
                             engine::Strategy mode = engine::Strategy::Lazy);

std::int64_t scalar(engine::Session &session, const std::string &sql, const engine::Params &params = {});

/// Readable rendering of a result for assertion messages and set comparison.
std::vector<std::string> render_rows(const engine::QueryResult &result);

/// Real ELF files from the host that are present and parse, capped at `limit`.
std::vector<std::string> system_elf_files(std::size_t limit);

} // namespace elfql::test

namespace elfql::test {

/// Layout of the checked-in tests/data/ruby_like fixture: a PIE launcher
/// whose .dynsym holds 22 entries, mostly imports from libruby and libc.
bench::ElfImageSpec ruby_like_spec();

/// Random but seed-determined image layout: class, byte order, symbol mix,
/// versions and dynamic entries all vary.
bench::ElfImageSpec random_elf_spec(std::uint64_t seed);

/// SELECT over a random table with a random filter and a total ORDER BY.
std::string random_ordered_query(std::mt19937_64 &rng);

} // namespace elfql::test
