#include "elfql/bench/bench.hpp"

#include "elfql/analyses/analyses.hpp"
#include "elfql/bench/elf_writer.hpp"
#include "elfql/corpus/catalog.hpp"
#include "elfql/engine/session.hpp"
#include "elfql/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unistd.h>

namespace elfql::bench {
namespace fs = std::filesystem;

std::string format_symbol_name(const std::string &pattern, std::uint64_t index) {
    return fmt::format(fmt::runtime(pattern), fmt::arg("index", index));
}

std::vector<std::uint8_t> generate_elf_image(const GeneratedElfSpec &spec) {
    ElfImageSpec image;
    image.machine = spec.machine;
    image.soname = fmt::format("libbench{}.so", spec.symbol_count);
    image.dynamic_symbols.reserve(spec.symbol_count);
    for (std::uint64_t i = 0; i < spec.symbol_count; ++i) {
        SymbolSpec s;
        s.name = format_symbol_name(spec.name_pattern, i);
        image.dynamic_symbols.push_back(std::move(s));
    }
    return build_elf(image);
}

std::vector<std::string> generate_elf(const GeneratedElfSpec &spec, const fs::path &dest) {
    const auto bytes = generate_elf_image(spec);
    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("cannot write " + dest.string());
    std::vector<std::string> names;
    names.reserve(spec.symbol_count);
    for (std::uint64_t i = 0; i < spec.symbol_count; ++i) names.push_back(format_symbol_name(spec.name_pattern, i));
    return names;
}

namespace {

constexpr std::array<std::pair<Pipeline, std::string_view>, 3> kPipelineNames{{
    {Pipeline::FreshParseQuery, "FRESH_PARSE_QUERY"},
    {Pipeline::MemoizedDbQuery, "MEMOIZED_DB_QUERY"},
    {Pipeline::ExternalReadelfWc, "EXTERNAL_READELF_WC"},
}};

std::optional<fs::path> find_on_path(const std::string &program) {
    const char *path = std::getenv("PATH");
    if (path == nullptr) return std::nullopt;
    std::stringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        const fs::path candidate = fs::path(dir) / program;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    return std::nullopt;
}

std::string shell_quote(const std::string &s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

std::int64_t fresh_count(const fs::path &file) {
    const std::vector<fs::path> paths{file};
    auto added = corpus::add_paths(paths);
    const std::string path = added.catalog.entries().at(0).path;
    auto catalog = std::make_shared<const corpus::CorpusCatalog>(std::move(added.catalog));
    auto session = engine::Session::open(catalog);
    return analyses::count_symbols(session, path, false);
}

std::int64_t memoized_count(const fs::path &db, const std::string &path) {
    auto session = engine::Session::open_file(db);
    return analyses::count_symbols(session, path, false);
}

std::int64_t external_count(const std::string &command) {
    FILE *pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) throw Error("cannot start: " + command);
    std::string output;
    std::array<char, 256> buf{};
    while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    if (status != 0) throw Error("command failed: " + command);
    return std::stoll(output);
}

BenchResult time_pipeline(Pipeline pipeline, std::uint64_t symbols, int reps,
                          const std::function<std::int64_t()> &body) {
    BenchResult result;
    result.pipeline = pipeline;
    result.symbols = symbols;
    std::vector<double> times;
    try {
        for (int i = 0; i < reps; ++i) {
            const auto start = std::chrono::steady_clock::now();
            result.observed_count = body();
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            times.push_back(elapsed.count());
        }
    } catch (const std::exception &e) {
        result.note = e.what();
        return result;
    }
    std::sort(times.begin(), times.end());
    result.repetitions = reps;
    result.min_s = times.front();
    const std::size_t mid = times.size() / 2;
    result.median_s = times.size() % 2 == 1 ? times[mid] : (times[mid - 1] + times[mid]) / 2;
    return result;
}

} // namespace

std::string to_string(Pipeline p) {
    for (const auto &[value, name] : kPipelineNames) {
        if (value == p) return std::string(name);
    }
    return "UNKNOWN";
}

std::optional<Pipeline> parse_pipeline(std::string_view name) {
    for (const auto &[value, text] : kPipelineNames) {
        if (text == name) return value;
    }
    return std::nullopt;
}

std::vector<BenchResult> run_benchmark(const BenchOptions &options) {
    const int reps = std::max(options.repetitions, 3);
    const fs::path work = options.work_dir.empty() ? fs::temp_directory_path() / "elfql-bench" : options.work_dir;
    fs::create_directories(work);
    const auto readelf = find_on_path("readelf");

    std::vector<BenchResult> results;
    for (const std::uint64_t count : options.counts) {
        GeneratedElfSpec spec;
        spec.symbol_count = count;
        const fs::path file = work / fmt::format("bench_{}.so", count);
        const auto bytes = generate_elf_image(spec);
        // Reuse a cached fixture only when it is byte-identical.
        bool fresh_file = true;
        if (fs::exists(file) && fs::file_size(file) == bytes.size()) {
            std::ifstream in(file, std::ios::binary);
            std::vector<std::uint8_t> existing(bytes.size());
            in.read(reinterpret_cast<char *>(existing.data()), static_cast<std::streamsize>(existing.size()));
            fresh_file = existing != bytes;
        }
        if (fresh_file) generate_elf(spec, file);
        const std::string canonical = fs::canonical(file).string();

        for (const Pipeline pipeline : options.pipelines) {
            switch (pipeline) {
            case Pipeline::FreshParseQuery:
                results.push_back(time_pipeline(pipeline, count, reps, [&] { return fresh_count(file); }));
                break;
            case Pipeline::MemoizedDbQuery: {
                const fs::path db = work / fmt::format("bench_{}.sqlite", count);
                try {
                    // Export happens once, outside the timed region.
                    const std::vector<fs::path> paths{file};
                    auto added = corpus::add_paths(paths);
                    auto catalog = std::make_shared<const corpus::CorpusCatalog>(std::move(added.catalog));
                    auto session = engine::Session::open(catalog);
                    session.export_database(db, true);
                } catch (const std::exception &e) {
                    BenchResult failed;
                    failed.pipeline = pipeline;
                    failed.symbols = count;
                    failed.note = e.what();
                    results.push_back(failed);
                    break;
                }
                results.push_back(time_pipeline(pipeline, count, reps, [&] { return memoized_count(db, canonical); }));
                break;
            }
            case Pipeline::ExternalReadelfWc: {
                if (!readelf) {
                    BenchResult skipped;
                    skipped.pipeline = pipeline;
                    skipped.symbols = count;
                    skipped.skipped = true;
                    skipped.note = "readelf not found on PATH; pipeline skipped";
                    results.push_back(skipped);
                    break;
                }
                const std::string command =
                    shell_quote(readelf->string()) + " --dyn-syms -W " + shell_quote(canonical) + " | wc -l";
                results.push_back(time_pipeline(pipeline, count, reps, [&] { return external_count(command); }));
                break;
            }
            }
        }
    }
    return results;
}

std::string to_csv(const std::vector<BenchResult> &results) {
    std::string out = "symbols,pipeline,median_s,min_s,reps\n";
    for (const auto &r : results) {
        if (!r.ok()) continue;
        out += fmt::format("{},{},{:.6f},{:.6f},{}\n", r.symbols, to_string(r.pipeline), r.median_s, r.min_s,
                           r.repetitions);
    }
    return out;
}

std::string to_plot_data(const std::vector<BenchResult> &results) {
    std::vector<Pipeline> pipelines;
    std::map<std::uint64_t, std::map<Pipeline, double>> table;
    for (const auto &r : results) {
        if (std::find(pipelines.begin(), pipelines.end(), r.pipeline) == pipelines.end()) {
            pipelines.push_back(r.pipeline);
        }
        auto &row = table[r.symbols];
        if (r.ok()) row[r.pipeline] = r.median_s;
    }
    std::string out = "# symbols";
    for (const auto p : pipelines) out += " " + to_string(p);
    out += "\n";
    for (const auto &[symbols, row] : table) {
        out += std::to_string(symbols);
        for (const auto p : pipelines) {
            const auto it = row.find(p);
            out += it == row.end() ? std::string(" nan") : fmt::format(" {:.6f}", it->second);
        }
        out += "\n";
    }
    return out;
}

} // namespace elfql::bench
