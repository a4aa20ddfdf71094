#include "elfql/bench/bench.hpp"
#include "elfql/analyses/analyses.hpp"
#include "elfql/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace elfql;
using namespace elfql::test;
using bench::Pipeline;

namespace {

std::vector<std::string> exported_names(engine::Session &session, const std::string &path) {
    const auto r = session.execute(
        "SELECT name FROM elf_symbols WHERE path = :p AND \"table\" = '.dynsym' AND exported ORDER BY \"index\"",
        {{"p", path}});
    std::vector<std::string> out;
    for (const auto &row : r.rows) out.push_back(std::get<std::string>(row[0]));
    return out;
}

/// Restores PATH on scope exit.
struct PathOverride {
    std::string saved;
    explicit PathOverride(const std::string &value) : saved(std::getenv("PATH") ? std::getenv("PATH") : "") {
        ::setenv("PATH", value.c_str(), 1);
    }
    ~PathOverride() { ::setenv("PATH", saved.c_str(), 1); }
};

} // namespace

TEST(Generate, NamesMatchTheWrittenTable) {
    TempDir dir;
    for (const std::uint64_t n : {0ull, 1ull, 7ull, 1000ull}) {
        SCOPED_TRACE(n);
        const auto dest = dir / ("g" + std::to_string(n) + ".so");
        const auto names = bench::generate_elf({.symbol_count = n}, dest);
        ASSERT_EQ(names.size(), n);
        const auto path = fs::canonical(dest).string();
        auto session = open_session({path});
        EXPECT_EQ(exported_names(session, path), names);
        EXPECT_EQ(analyses::count_symbols(session, path, false), static_cast<std::int64_t>(n) + 1);
        EXPECT_EQ(readelf_symbol_counts(path).at(".dynsym"), static_cast<std::int64_t>(n) + 1);
        std::vector<std::string> oracle;
        for (const auto &s : readelf_symbols(path)) {
            if (s.table == ".dynsym" && s.index > 0) oracle.push_back(s.name);
        }
        EXPECT_EQ(oracle, names);
    }
}

TEST(Generate, Deterministic) {
    const bench::GeneratedElfSpec spec{.symbol_count = 321};
    EXPECT_EQ(bench::generate_elf_image(spec), bench::generate_elf_image(spec));
    auto other = spec;
    other.name_pattern = "f{index}";
    EXPECT_NE(bench::generate_elf_image(spec), bench::generate_elf_image(other));
}

TEST(Generate, PatternAndMachine) {
    EXPECT_EQ(bench::format_symbol_name("sym_{index:08}", 42), "sym_00000042");
    EXPECT_EQ(bench::format_symbol_name("x{index}y{index:x}", 255), "x255yff");
    EXPECT_ANY_THROW(bench::format_symbol_name("bad_{nope}", 1));
    EXPECT_ANY_THROW(bench::format_symbol_name("unterminated_{index", 1));

    TempDir dir;
    bench::generate_elf({.symbol_count = 3, .machine = elf::Machine::AArch64}, dir / "arm.so");
    const auto obj = elf::open_elf_file(dir / "arm.so");
    EXPECT_EQ(obj.header().machine, elf::Machine::AArch64);
    EXPECT_EQ(obj.header().file_type, elf::FileType::Dyn);
}

TEST(Generate, UnwritableDestination) {
    TempDir dir;
    EXPECT_THROW(bench::generate_elf({.symbol_count = 1}, dir / "missing" / "x.so"), IoError);
}

TEST(Pipelines, Names) {
    for (const auto p : {Pipeline::FreshParseQuery, Pipeline::MemoizedDbQuery, Pipeline::ExternalReadelfWc}) {
        EXPECT_EQ(bench::parse_pipeline(bench::to_string(p)), p);
    }
    EXPECT_EQ(bench::to_string(Pipeline::MemoizedDbQuery), "MEMOIZED_DB_QUERY");
    EXPECT_EQ(bench::parse_pipeline("fresh"), std::nullopt);
}

TEST(Benchmark, SmokeRunCountsEverySymbol) {
    TempDir dir;
    bench::BenchOptions options;
    options.counts = {10, 200};
    options.repetitions = 1;
    options.work_dir = dir.path;
    const auto results = bench::run_benchmark(options);
    ASSERT_EQ(results.size(), 6u);
    for (const auto &r : results) {
        SCOPED_TRACE(bench::to_string(r.pipeline) + " " + std::to_string(r.symbols));
        if (r.pipeline == Pipeline::ExternalReadelfWc && !have_program("readelf")) {
            EXPECT_TRUE(r.skipped);
            continue;
        }
        ASSERT_TRUE(r.ok()) << r.note;
        EXPECT_EQ(r.repetitions, 3);
        EXPECT_GT(r.median_s, 0.0);
        EXPECT_LE(r.min_s, r.median_s);
        if (r.pipeline == Pipeline::ExternalReadelfWc) {
            // Heading lines plus one line per entry.
            EXPECT_GE(r.observed_count, static_cast<std::int64_t>(r.symbols) + 1);
        } else {
            EXPECT_EQ(r.observed_count, static_cast<std::int64_t>(r.symbols) + 1);
        }
    }

    const auto csv = bench::to_csv(results);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "symbols,pipeline,median_s,min_s,reps");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);

    const auto plot = bench::to_plot_data(results);
    EXPECT_EQ(plot.rfind("# symbols FRESH_PARSE_QUERY MEMOIZED_DB_QUERY EXTERNAL_READELF_WC\n", 0), 0u);
    EXPECT_NE(plot.find("\n10 "), std::string::npos);
    EXPECT_NE(plot.find("\n200 "), std::string::npos);

    // Cached fixtures are reused when identical.
    const auto before = fs::last_write_time(dir / "bench_10.so");
    options.pipelines = {Pipeline::FreshParseQuery};
    bench::run_benchmark(options);
    EXPECT_EQ(fs::last_write_time(dir / "bench_10.so"), before);
}

TEST(Benchmark, MissingReadelfIsSkippedWithNotice) {
    TempDir dir;
    bench::BenchOptions options;
    options.counts = {5};
    options.pipelines = {Pipeline::ExternalReadelfWc, Pipeline::FreshParseQuery};
    options.work_dir = dir.path;
    std::vector<bench::BenchResult> results;
    {
        PathOverride path((dir / "empty-bin").string());
        results = bench::run_benchmark(options);
    }
    ASSERT_EQ(results.size(), 2u);
    EXPECT_TRUE(results[0].skipped);
    EXPECT_NE(results[0].note.find("readelf"), std::string::npos);
    EXPECT_TRUE(results[1].ok());
    const auto plot = bench::to_plot_data(results);
    EXPECT_NE(plot.find("\n5 nan "), std::string::npos) << plot;
    EXPECT_EQ(bench::to_csv(results).find("EXTERNAL"), std::string::npos);
}
