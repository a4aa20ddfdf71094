#include "elfql/elf/reader.hpp"
#include "elfql/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <sstream>

using namespace elfql;
using namespace elfql::test;
using elf::SymbolTable;

namespace {

std::string readelf(const std::string &args, const std::string &path) {
    return run_command("readelf " + args + " " + shell_quote(path) + " 2>/dev/null").output;
}

std::vector<std::string> compiled_fixtures() {
    std::vector<std::string> out;
    for (const auto &e : fs::recursive_directory_iterator(fixture_dir())) {
        if (e.is_regular_file()) out.push_back(fs::canonical(e.path()).string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> oracle_files() {
    auto files = compiled_fixtures();
    for (auto &f : system_elf_files(12)) files.push_back(f);
    files.push_back(fs::canonical(data_dir() / "ruby_like").string());
    return files;
}

bench::ElfImageSpec sample_spec(elf::ElfClass cls, elf::DataEncoding enc) {
    bench::ElfImageSpec spec;
    spec.elf_class = cls;
    spec.encoding = enc;
    spec.machine = cls == elf::ElfClass::Elf64 ? elf::Machine::X86_64 : elf::Machine::I386;
    spec.needed = {"libc.so.6", "libm.so.6"};
    spec.soname = "libsample.so.1";
    spec.runpath = "$ORIGIN/../lib";
    bench::SymbolSpec f;
    f.name = "exported_fn";
    f.size = 5;
    bench::SymbolSpec v1 = f;
    v1.name = "versioned";
    v1.version = "V1";
    v1.hidden_version = true;
    bench::SymbolSpec v2 = v1;
    v2.version = "V2";
    v2.hidden_version = false;
    bench::SymbolSpec imp;
    imp.name = "puts";
    imp.placement = bench::Placement::Undefined;
    imp.size = 0;
    imp.version = "GLIBC_2.2.5";
    imp.version_file = "libc.so.6";
    bench::SymbolSpec data;
    data.name = "table_data";
    data.type = elf::SymbolType::Object;
    data.placement = bench::Placement::Data;
    data.size = 16;
    spec.dynamic_symbols = {f, v1, v2, imp, data};
    spec.symtab = true;
    bench::SymbolSpec local = f;
    local.name = "local_helper";
    local.binding = elf::SymbolBinding::Local;
    spec.static_symbols = {f, local, data};
    return spec;
}

template <typename T> void put(std::vector<std::uint8_t> &b, std::size_t off, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) b[off + i] = static_cast<std::uint8_t>(value >> (8 * i));
}

template <typename T> T get(const std::vector<std::uint8_t> &b, std::size_t off) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[off + i]) << (8 * i));
    return v;
}

} // namespace

TEST(ElfReader, HeaderMatchesReadelf) {
    for (const auto &path : oracle_files()) {
        SCOPED_TRACE(path);
        const auto obj = elf::open_elf_file(path);
        const std::string text = readelf("-hW", path);
        std::smatch m;
        ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(Number of section headers:\s+(\d+))")));
        EXPECT_EQ(obj.sections().size(), std::stoul(m[1]));
        ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(Number of program headers:\s+(\d+))")));
        EXPECT_EQ(obj.segments().size(), std::stoul(m[1]));
        ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(Entry point address:\s+0x([0-9a-f]+))")));
        EXPECT_EQ(obj.header().entry_point, std::stoull(m[1], nullptr, 16));
        ASSERT_TRUE(std::regex_search(text, m, std::regex(R"(Type:\s+(\w+))")));
        EXPECT_EQ(to_string(obj.header().file_type), std::string(m[1]));
    }
}

TEST(ElfReader, SectionNamesMatchReadelf) {
    static const std::regex row(R"(^\s*\[\s*(\d+)\]\s+(\S*)\s+\S+\s+[0-9a-f]+\s+([0-9a-f]+)\s+([0-9a-f]+))");
    for (const auto &path : oracle_files()) {
        SCOPED_TRACE(path);
        const auto obj = elf::open_elf_file(path);
        std::istringstream lines(readelf("-SW", path));
        std::string line;
        std::size_t seen = 0;
        while (std::getline(lines, line)) {
            std::smatch m;
            if (!std::regex_search(line, m, row)) continue;
            const auto index = std::stoul(m[1]);
            ASSERT_LT(index, obj.sections().size());
            const auto &s = obj.sections()[index];
            // readelf leaves the NULL section's name column empty and the regex
            // then captures the type; skip index 0.
            if (index > 0) EXPECT_EQ(s.name, std::string(m[2]));
            EXPECT_EQ(s.offset, std::stoull(m[3], nullptr, 16));
            EXPECT_EQ(s.size, std::stoull(m[4], nullptr, 16));
            ++seen;
        }
        EXPECT_EQ(seen, obj.sections().size());
    }
}

TEST(ElfReader, SymbolCountsMatchReadelf) {
    for (const auto &path : oracle_files()) {
        SCOPED_TRACE(path);
        const auto obj = elf::open_elf_file(path);
        const auto expected = readelf_symbol_counts(path);
        std::map<std::string, std::int64_t> actual;
        for (const auto table : {SymbolTable::SymTab, SymbolTable::DynSym}) {
            if (obj.has_symbol_table(table)) {
                actual[to_string(table)] = static_cast<std::int64_t>(obj.symbols(table).size());
            }
        }
        EXPECT_EQ(actual, expected);
    }
}

TEST(ElfReader, SymbolAttributesMatchReadelf) {
    for (const auto &path : oracle_files()) {
        SCOPED_TRACE(path);
        const auto obj = elf::open_elf_file(path);
        for (const auto &r : readelf_symbols(path)) {
            const auto table = r.table == ".dynsym" ? SymbolTable::DynSym : SymbolTable::SymTab;
            const auto &s = obj.symbols(table).at(static_cast<std::size_t>(r.index));
            EXPECT_EQ(to_string(s.type), r.type) << r.name;
            EXPECT_EQ(to_string(s.binding), r.bind) << r.name;
            EXPECT_EQ(to_string(s.visibility), r.visibility) << r.name;
            if (r.ndx == "UND") EXPECT_EQ(s.shndx, elf::kShnUndef);
            else if (r.ndx == "ABS") EXPECT_EQ(s.shndx, elf::kShnAbs);
            else if (r.ndx == "COM") EXPECT_EQ(s.shndx, elf::kShnCommon);
            else EXPECT_EQ(s.shndx, std::stoul(r.ndx));
            // readelf shows the section name for unnamed STT_SECTION symbols.
            if (s.type == elf::SymbolType::Section && s.name.empty()) {
                EXPECT_EQ(obj.sections().at(s.shndx).name, r.name);
            } else {
                EXPECT_EQ(s.name, r.name);
            }
        }
    }
}

TEST(ElfReader, DynamicEntryCountMatchesReadelf) {
    static const std::regex header(R"(Dynamic section at offset 0x[0-9a-f]+ contains (\d+) entr)");
    for (const auto &path : oracle_files()) {
        SCOPED_TRACE(path);
        const auto obj = elf::open_elf_file(path);
        std::smatch m;
        const std::string text = readelf("-dW", path);
        if (std::regex_search(text, m, header)) {
            EXPECT_EQ(obj.dynamic_entries().size(), std::stoul(m[1]));
            EXPECT_EQ(obj.dynamic_entries().back().tag, elf::DynamicTag::Null);
        } else {
            EXPECT_TRUE(obj.dynamic_entries().empty());
        }
    }
}

TEST(ElfReader, NeededAndRunpath) {
    const auto app = elf::open_elf_file(fixture("chain/bin/app"));
    EXPECT_EQ(elf::needed_libraries(app), (std::vector<std::string>{"libA.so", "libc.so.6"}));
    EXPECT_EQ(elf::dynamic_string(app, elf::DynamicTag::RunPath), "$ORIGIN/../lib1");
    EXPECT_FALSE(elf::dynamic_string(app, elf::DynamicTag::RPath).has_value());

    const auto legacy = elf::open_elf_file(fixture("rpath/bin/app_rpath"));
    EXPECT_EQ(elf::dynamic_string(legacy, elf::DynamicTag::RPath), "$ORIGIN/../lib");

    const auto lib = elf::open_elf_file(fixture("chain/lib2/libB.so"));
    EXPECT_EQ(elf::dynamic_string(lib, elf::DynamicTag::SoName), "libB.so");
}

TEST(ElfReader, SymbolVersionsFromCompiledLibrary) {
    const auto obj = elf::open_elf_file(fixture("versioned/libver.so"));
    std::map<std::string, std::vector<elf::SymbolVersion>> versions;
    for (const auto &s : obj.symbols(SymbolTable::DynSym)) {
        if (s.version) versions[s.name].push_back(*s.version);
    }
    const auto &v = versions.at("versioned");
    ASSERT_EQ(v.size(), 2u);
    EXPECT_TRUE(std::find(v.begin(), v.end(), elf::SymbolVersion{"VER_1", false}) != v.end());
    EXPECT_TRUE(std::find(v.begin(), v.end(), elf::SymbolVersion{"VER_2", true}) != v.end());
    EXPECT_EQ(versions.at("stable").at(0), (elf::SymbolVersion{"VER_1", true}));
    EXPECT_EQ(versions.count("hidden_helper"), 0u);

    // Imports carry the required version, never as a default.
    const auto hello = elf::open_elf_file(fixture("misc/hello_pie"));
    bool saw_glibc = false;
    for (const auto &s : hello.symbols(SymbolTable::DynSym)) {
        if (s.version && s.version->name.rfind("GLIBC_", 0) == 0) {
            saw_glibc = true;
            EXPECT_FALSE(s.version->is_default) << s.name;
        }
    }
    EXPECT_TRUE(saw_glibc);

    // .symtab entries have no versions.
    for (const auto &s : hello.symbols(SymbolTable::SymTab)) {
        EXPECT_FALSE(elf::resolve_symbol_version(hello, s.index, SymbolTable::SymTab).has_value());
    }
}

class WriterRoundTrip : public ::testing::TestWithParam<std::pair<elf::ElfClass, elf::DataEncoding>> {};

TEST_P(WriterRoundTrip, ReaderRecoversSpec) {
    const auto [cls, enc] = GetParam();
    const auto spec = sample_spec(cls, enc);
    const auto obj = elf::open_elf(bench::build_elf(spec), "sample");
    EXPECT_EQ(obj.header().ident.elf_class, cls);
    EXPECT_EQ(obj.header().ident.data_encoding, enc);
    EXPECT_EQ(obj.header().machine, spec.machine);
    EXPECT_EQ(elf::needed_libraries(obj), spec.needed);
    EXPECT_EQ(elf::dynamic_string(obj, elf::DynamicTag::SoName), spec.soname);
    EXPECT_EQ(elf::dynamic_string(obj, elf::DynamicTag::RunPath), spec.runpath);

    const auto &dyn = obj.symbols(SymbolTable::DynSym);
    ASSERT_EQ(dyn.size(), spec.dynamic_symbols.size() + 1);
    for (std::size_t i = 0; i < spec.dynamic_symbols.size(); ++i) {
        const auto &want = spec.dynamic_symbols[i];
        const auto &got = dyn[i + 1];
        EXPECT_EQ(got.name, want.name);
        EXPECT_EQ(got.type, want.type);
        EXPECT_EQ(got.binding, want.binding);
        EXPECT_EQ(got.size, want.size);
        if (want.version.empty()) {
            EXPECT_FALSE(got.version.has_value()) << want.name;
        } else {
            ASSERT_TRUE(got.version.has_value()) << want.name;
            EXPECT_EQ(got.version->name, want.version);
            EXPECT_EQ(got.version->is_default, want.version_file.empty() && !want.hidden_version);
        }
    }
    // Locals come first in .symtab.
    const auto &st = obj.symbols(SymbolTable::SymTab);
    ASSERT_EQ(st.size(), 4u);
    EXPECT_EQ(st[1].name, "local_helper");
    EXPECT_EQ(st[1].binding, elf::SymbolBinding::Local);
}

TEST_P(WriterRoundTrip, ReadelfAgreesWithWriter) {
    const auto [cls, enc] = GetParam();
    TempDir dir;
    const auto path = write_elf(dir / "sample.so", sample_spec(cls, enc));
    const auto counts = readelf_symbol_counts(path);
    EXPECT_EQ(counts.at(".dynsym"), 6);
    EXPECT_EQ(counts.at(".symtab"), 4);
}

INSTANTIATE_TEST_SUITE_P(AllLayouts, WriterRoundTrip,
                         ::testing::Values(std::pair{elf::ElfClass::Elf64, elf::DataEncoding::Lsb},
                                           std::pair{elf::ElfClass::Elf64, elf::DataEncoding::Msb},
                                           std::pair{elf::ElfClass::Elf32, elf::DataEncoding::Lsb},
                                           std::pair{elf::ElfClass::Elf32, elf::DataEncoding::Msb}));

TEST(ElfReader, RejectsNonElf) {
    const std::string text = "#!/bin/sh\necho hello\n";
    EXPECT_THROW(elf::open_elf(std::vector<std::uint8_t>(text.begin(), text.end()), "script"), NotElfError);
    EXPECT_THROW(elf::open_elf(std::vector<std::uint8_t>{}, "empty"), NotElfError);
}

TEST(ElfReader, TruncatedHeaderIsMalformed) {
    const std::vector<std::uint8_t> magic_only{0x7f, 'E', 'L', 'F', 2, 1, 1};
    EXPECT_THROW(elf::open_elf(magic_only, "short"), MalformedError);
    auto bytes = bench::build_elf(sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    bytes.resize(40);
    EXPECT_THROW(elf::open_elf(bytes, "short"), MalformedError);
}

TEST(ElfReader, BadIdentIsMalformed) {
    auto bytes = bench::build_elf(sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    auto bad_class = bytes;
    bad_class[4] = 7;
    EXPECT_THROW(elf::open_elf(bad_class, "x"), MalformedError);
    auto bad_data = bytes;
    bad_data[5] = 0;
    EXPECT_THROW(elf::open_elf(bad_data, "x"), MalformedError);
}

TEST(ElfReader, OutOfRangeTablesAreMalformed) {
    const auto good = bench::build_elf(sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    auto bad_shoff = good;
    put<std::uint64_t>(bad_shoff, 0x28, good.size() + 100);
    EXPECT_THROW(elf::open_elf(bad_shoff, "x"), MalformedError);

    // Point .dynsym past the end of the file.
    auto bad_section = good;
    const auto shoff = get<std::uint64_t>(good, 0x28);
    put<std::uint64_t>(bad_section, shoff + 64 * 1 + 0x18, good.size() * 4);
    EXPECT_THROW(elf::open_elf(bad_section, "x"), MalformedError);
}

TEST(ElfReader, ExtendedSectionNumbering) {
    const auto good = bench::build_elf(sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    const auto reference = elf::open_elf(good, "x");
    auto ext = good;
    const auto shoff = get<std::uint64_t>(good, 0x28);
    const auto shnum = get<std::uint16_t>(good, 0x3c);
    const auto shstrndx = get<std::uint16_t>(good, 0x3e);
    put<std::uint16_t>(ext, 0x3c, 0);
    put<std::uint16_t>(ext, 0x3e, 0xffff);
    put<std::uint64_t>(ext, shoff + 0x20, shnum);   // section 0 sh_size
    put<std::uint32_t>(ext, shoff + 0x28, shstrndx); // section 0 sh_link
    const auto obj = elf::open_elf(ext, "x");
    EXPECT_EQ(obj.header().shnum, shnum);
    EXPECT_EQ(obj.header().shstrndx, shstrndx);
    ASSERT_EQ(obj.sections().size(), reference.sections().size());
    for (std::size_t i = 1; i < obj.sections().size(); ++i) EXPECT_EQ(obj.sections()[i].name, reference.sections()[i].name);
    EXPECT_EQ(obj.symbols(SymbolTable::DynSym), reference.symbols(SymbolTable::DynSym));
}

TEST(ElfReader, EveryTruncationFailsCleanly) {
    const auto good = bench::build_elf(sample_spec(elf::ElfClass::Elf32, elf::DataEncoding::Msb));
    for (std::size_t n = 0; n < good.size(); ++n) {
        std::vector<std::uint8_t> prefix(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n));
        try {
            (void)elf::open_elf(std::move(prefix), "x");
        } catch (const NotElfError &) {
        } catch (const MalformedError &) {
        }
    }
}

TEST(ElfReader, RandomCorruptionFailsCleanly) {
    const auto good = bench::build_elf(sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    std::mt19937 rng(1234);
    std::uniform_int_distribution<std::size_t> pos(0, good.size() - 1);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 2000; ++trial) {
        auto bytes = good;
        for (int k = 0; k < 4; ++k) bytes[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
        try {
            (void)elf::open_elf(std::move(bytes), "x");
        } catch (const NotElfError &) {
        } catch (const MalformedError &) {
        }
    }
}

TEST(ElfReader, CanonicalPathAndEquality) {
    TempDir dir;
    const auto target = write_elf(dir / "real.so", sample_spec(elf::ElfClass::Elf64, elf::DataEncoding::Lsb));
    fs::create_symlink(target, dir / "alias.so");
    const auto a = elf::open_elf_file(dir / "alias.so");
    const auto b = elf::open_elf_file(target);
    EXPECT_EQ(a.path(), target);
    EXPECT_EQ(a, b);
    EXPECT_THROW(elf::open_elf_file(dir / "missing.so"), IoError);
}
