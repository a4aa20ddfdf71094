#pragma once

#include "elfql/elf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace elfql::bench {

struct GeneratedElfSpec {
    std::uint64_t symbol_count = 0;
    elf::Machine machine = elf::Machine::X86_64;
    /// fmt-style template with a named `index` argument (0-based).
    std::string name_pattern = "sym_{index:08}";
};

std::string format_symbol_name(const std::string &pattern, std::uint64_t index);

/// ET_DYN image with `symbol_count` defined GLOBAL FUNC symbols in .dynsym,
/// each backed by a one-byte `ret` stub. Deterministic.
std::vector<std::uint8_t> generate_elf_image(const GeneratedElfSpec &spec);

/// Writes the image to `dest` and returns the symbol names in table order.
/// Throws IoError.
std::vector<std::string> generate_elf(const GeneratedElfSpec &spec, const std::filesystem::path &dest);

enum class Pipeline { FreshParseQuery, MemoizedDbQuery, ExternalReadelfWc };

std::string to_string(Pipeline p);
std::optional<Pipeline> parse_pipeline(std::string_view name);

struct BenchResult {
    Pipeline pipeline = Pipeline::FreshParseQuery;
    std::uint64_t symbols = 0;
    int repetitions = 0;
    double median_s = 0;
    double min_s = 0;
    /// Row count observed by the pipeline on its last repetition.
    std::int64_t observed_count = -1;
    bool skipped = false;
    /// Skip notice or failure message; empty on success.
    std::string note;

    bool ok() const noexcept { return !skipped && note.empty(); }
};

struct BenchOptions {
    std::vector<std::uint64_t> counts;
    std::vector<Pipeline> pipelines = {Pipeline::FreshParseQuery, Pipeline::MemoizedDbQuery,
                                       Pipeline::ExternalReadelfWc};
    /// Clamped to at least 3.
    int repetitions = 5;
    /// Generated fixtures and exported databases are cached here.
    std::filesystem::path work_dir;
};

/// Runs every pipeline for every count, serially.
std::vector<BenchResult> run_benchmark(const BenchOptions &options);

/// "symbols,pipeline,median_s,min_s,reps" followed by one line per ok result.
std::string to_csv(const std::vector<BenchResult> &results);

/// Whitespace-separated columns per pipeline, one line per count, for
/// plotting tools: `symbols <median per pipeline...>`, "nan" where missing.
std::string to_plot_data(const std::vector<BenchResult> &results);

} // namespace elfql::bench
