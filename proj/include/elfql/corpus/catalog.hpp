#pragma once

#include "elfql/elf/reader.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace elfql::corpus {

enum class Provenance { Explicit, Recursive };

std::string to_string(Provenance p);

struct CatalogEntry {
    std::string path; // canonical absolute
    Provenance provenance = Provenance::Explicit;
    std::shared_ptr<const elf::ElfObject> object;
};

/// Ordered, path-unique set of parsed files.
class CorpusCatalog {
public:
    const std::vector<CatalogEntry> &entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const CatalogEntry *find(std::string_view path) const;
    bool contains(std::string_view path) const { return find(path) != nullptr; }

    /// Appends unless the path is already present; returns whether it was added.
    bool add(CatalogEntry entry);

private:
    std::vector<CatalogEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_path_;
};

struct PathFailure {
    std::string path;
    std::string message;
};

struct AddOptions {
    /// Descend into subdirectories of directory arguments.
    bool recurse_directories = false;
};

struct AddPathsResult {
    CorpusCatalog catalog;
    std::size_t skipped_non_elf = 0;
    std::vector<PathFailure> failures;
};

/// Parses files and walks directories into a catalog. Symlinks are resolved to
/// their canonical targets and deduplicated. Unreadable or malformed files are
/// collected in `failures`; throws IoError only when every argument failed.
AddPathsResult add_paths(std::span<const std::filesystem::path> paths, const AddOptions &options = {});
void add_paths_to(AddPathsResult &into, std::span<const std::filesystem::path> paths, const AddOptions &options = {});

struct SearchConfig {
    std::vector<std::string> ld_library_path;
    std::vector<std::string> default_dirs = {"/lib", "/usr/lib", "/lib/x86_64-linux-gnu", "/usr/lib/x86_64-linux-gnu"};
    bool origin_substitution = true;

    /// Copies LD_LIBRARY_PATH from the process environment.
    static SearchConfig from_environment();
};

struct UnresolvedDependency {
    std::string soname;
    std::string dependent;

    bool operator==(const UnresolvedDependency &) const = default;
};

struct ResolveResult {
    CorpusCatalog catalog;
    std::vector<UnresolvedDependency> unresolved;
    /// Candidate files that existed but could not be parsed.
    std::vector<PathFailure> failures;
};

/// Breadth-first closure over DT_NEEDED of every explicit entry, following the
/// glibc search order: RPATH of the loader chain (only while the requesting
/// object has no RUNPATH), LD_LIBRARY_PATH, RUNPATH of the requesting object,
/// then the default directories. Existing RECURSIVE entries are recomputed.
ResolveResult resolve_recursive(const CorpusCatalog &catalog, const SearchConfig &config);

/// Splits a ':'-separated search path, substituting $ORIGIN / ${ORIGIN}.
std::vector<std::string> expand_search_path(std::string_view list, std::string_view origin_dir,
                                            bool origin_substitution);

} // namespace elfql::corpus
