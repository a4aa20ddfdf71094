#include "elfql/corpus/catalog.hpp"

#include "elfql/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <optional>
#include <set>
#include <unordered_set>

namespace elfql::corpus {

namespace fs = std::filesystem;

std::string to_string(Provenance p) { return p == Provenance::Explicit ? "EXPLICIT" : "RECURSIVE"; }

const CatalogEntry *CorpusCatalog::find(std::string_view path) const {
    const auto it = by_path_.find(std::string(path));
    return it == by_path_.end() ? nullptr : &entries_[it->second];
}

bool CorpusCatalog::add(CatalogEntry entry) {
    if (by_path_.contains(entry.path)) return false;
    by_path_.emplace(entry.path, entries_.size());
    entries_.push_back(std::move(entry));
    return true;
}

namespace {

bool starts_with_elf_magic(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    if (!in.read(magic, sizeof magic)) return false;
    return magic[0] == 0x7f && magic[1] == 'E' && magic[2] == 'L' && magic[3] == 'F';
}

enum class FileOutcome { Added, Duplicate, NotElf, Failed };

FileOutcome add_file(AddPathsResult &result, const fs::path &path) {
    std::error_code ec;
    const fs::path canonical = fs::canonical(path, ec);
    if (ec) {
        result.failures.push_back({path.string(), ec.message()});
        return FileOutcome::Failed;
    }
    if (result.catalog.contains(canonical.string())) return FileOutcome::Duplicate;
    if (!fs::is_regular_file(canonical, ec)) {
        result.failures.push_back({path.string(), "not a regular file"});
        return FileOutcome::Failed;
    }
    if (!starts_with_elf_magic(canonical)) {
        ++result.skipped_non_elf;
        return FileOutcome::NotElf;
    }
    try {
        auto obj = std::make_shared<const elf::ElfObject>(elf::open_elf_file(canonical));
        result.catalog.add({canonical.string(), Provenance::Explicit, std::move(obj)});
        return FileOutcome::Added;
    } catch (const Error &e) {
        result.failures.push_back({canonical.string(), e.what()});
        return FileOutcome::Failed;
    }
}

bool add_directory(AddPathsResult &result, const fs::path &dir, bool recurse) {
    std::vector<fs::path> files;
    std::vector<fs::path> subdirs;
    std::error_code ec;
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        std::error_code type_ec;
        if (it->is_directory(type_ec)) {
            if (recurse && !it->is_symlink(type_ec)) subdirs.push_back(it->path());
        } else if (it->is_regular_file(type_ec)) {
            files.push_back(it->path());
        }
    }
    if (ec) {
        result.failures.push_back({dir.string(), ec.message()});
        return false;
    }
    // Directory iteration order is unspecified; sort for a stable catalog.
    std::sort(files.begin(), files.end());
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto &f : files) add_file(result, f);
    for (const auto &d : subdirs) add_directory(result, d, recurse);
    return true;
}

} // namespace

void add_paths_to(AddPathsResult &into, std::span<const fs::path> paths, const AddOptions &options) {
    std::size_t failed_args = 0;
    for (const auto &p : paths) {
        std::error_code ec;
        const auto status = fs::status(p, ec);
        if (ec || !fs::exists(status)) {
            into.failures.push_back({p.string(), ec ? ec.message() : "no such file or directory"});
            ++failed_args;
        } else if (fs::is_directory(status)) {
            if (!add_directory(into, p, options.recurse_directories)) ++failed_args;
        } else if (add_file(into, p) == FileOutcome::Failed) {
            ++failed_args;
        }
    }
    if (!paths.empty() && failed_args == paths.size()) {
        throw IoError("no input could be loaded: " + into.failures.front().path + ": " + into.failures.front().message);
    }
}

AddPathsResult add_paths(std::span<const fs::path> paths, const AddOptions &options) {
    AddPathsResult result;
    add_paths_to(result, paths, options);
    return result;
}

SearchConfig SearchConfig::from_environment() {
    SearchConfig cfg;
    if (const char *env = std::getenv("LD_LIBRARY_PATH")) cfg.ld_library_path = expand_search_path(env, "", false);
    return cfg;
}

std::vector<std::string> expand_search_path(std::string_view list, std::string_view origin_dir,
                                            bool origin_substitution) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t colon = list.find(':', start);
        const std::size_t end = colon == std::string_view::npos ? list.size() : colon;
        std::string dir(list.substr(start, end - start));
        if (origin_substitution) {
            for (const std::string_view token : {"${ORIGIN}", "$ORIGIN"}) {
                for (std::size_t pos = dir.find(token); pos != std::string::npos; pos = dir.find(token, pos)) {
                    const std::size_t after = pos + token.size();
                    // "$ORIGINAL" is not a substitution.
                    if (token.front() == '$' && token[1] != '{' && after < dir.size() &&
                        (std::isalnum(static_cast<unsigned char>(dir[after])) || dir[after] == '_')) {
                        pos = after;
                        continue;
                    }
                    dir.replace(pos, token.size(), origin_dir);
                    pos += origin_dir.size();
                }
            }
        }
        if (!dir.empty()) out.push_back(std::move(dir));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    return out;
}

namespace {

struct Node {
    std::shared_ptr<const elf::ElfObject> object;
    std::string origin_dir;
    int loader = -1; // index into nodes, -1 for explicit roots
    bool has_runpath = false;
    std::optional<std::string> rpath;
    std::optional<std::string> runpath;
};

class Resolver {
public:
    Resolver(const CorpusCatalog &input, const SearchConfig &config) : input_(input), config_(config) {}

    ResolveResult run() {
        for (const auto &e : input_.entries()) {
            if (e.provenance != Provenance::Explicit) continue;
            result_.catalog.add(e);
            push_node(e.object, fs::path(e.path).parent_path().string(), -1);
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) visit(i);
        return std::move(result_);
    }

private:
    void push_node(std::shared_ptr<const elf::ElfObject> obj, std::string origin_dir, int loader) {
        Node n;
        n.origin_dir = std::move(origin_dir);
        n.loader = loader;
        try {
            n.rpath = elf::dynamic_string(*obj, elf::DynamicTag::RPath);
            n.runpath = elf::dynamic_string(*obj, elf::DynamicTag::RunPath);
        } catch (const Error &) {
        }
        n.has_runpath = n.runpath.has_value();
        register_names(*obj, fs::path(obj->path()).filename().string());
        n.object = std::move(obj);
        nodes_.push_back(std::move(n));
    }

    void register_names(const elf::ElfObject &obj, const std::string &name) {
        loaded_.insert(name);
        try {
            if (auto soname = elf::dynamic_string(obj, elf::DynamicTag::SoName)) loaded_.insert(*soname);
        } catch (const Error &) {
        }
    }

    void visit(std::size_t index) {
        std::vector<std::string> needed;
        try {
            needed = elf::needed_libraries(*nodes_[index].object);
        } catch (const Error &e) {
            result_.failures.push_back({nodes_[index].object->path(), e.what()});
            return;
        }
        for (const auto &soname : needed) {
            if (loaded_.contains(soname)) continue;
            if (!resolve(index, soname)) {
                UnresolvedDependency u{soname, nodes_[index].object->path()};
                if (std::find(result_.unresolved.begin(), result_.unresolved.end(), u) == result_.unresolved.end()) {
                    result_.unresolved.push_back(std::move(u));
                }
            }
        }
    }

    std::vector<std::string> search_dirs(std::size_t index) const {
        std::vector<std::string> dirs;
        const Node &node = nodes_[index];
        auto append = [&](const Node &n, const std::optional<std::string> &list) {
            if (!list) return;
            for (auto &d : expand_search_path(*list, n.origin_dir, config_.origin_substitution)) dirs.push_back(d);
        };
        if (!node.has_runpath) {
            for (int i = static_cast<int>(index); i >= 0; i = nodes_[static_cast<std::size_t>(i)].loader) {
                const Node &n = nodes_[static_cast<std::size_t>(i)];
                if (!n.has_runpath) append(n, n.rpath);
            }
        }
        dirs.insert(dirs.end(), config_.ld_library_path.begin(), config_.ld_library_path.end());
        append(node, node.runpath);
        dirs.insert(dirs.end(), config_.default_dirs.begin(), config_.default_dirs.end());
        return dirs;
    }

    bool compatible(const elf::ElfObject &candidate, const elf::ElfObject &dependent) const {
        const auto &a = candidate.header();
        const auto &b = dependent.header();
        return a.ident.elf_class == b.ident.elf_class && a.ident.data_encoding == b.ident.data_encoding &&
               a.machine == b.machine;
    }

    bool resolve(std::size_t index, const std::string &soname) {
        std::vector<fs::path> candidates;
        if (soname.find('/') != std::string::npos) {
            const auto expanded =
                expand_search_path(soname, nodes_[index].origin_dir, config_.origin_substitution);
            if (!expanded.empty()) candidates.emplace_back(expanded.front());
        } else {
            for (const auto &dir : search_dirs(index)) candidates.push_back(fs::path(dir) / soname);
        }

        for (const auto &candidate : candidates) {
            std::error_code ec;
            if (!fs::is_regular_file(candidate, ec)) continue;
            const fs::path canonical = fs::canonical(candidate, ec);
            if (ec) continue;

            std::shared_ptr<const elf::ElfObject> obj;
            if (const auto *existing = result_.catalog.find(canonical.string())) {
                obj = existing->object;
            } else if (const auto *cached = input_.find(canonical.string())) {
                obj = cached->object;
            } else {
                try {
                    obj = std::make_shared<const elf::ElfObject>(elf::open_elf_file(canonical));
                } catch (const Error &e) {
                    result_.failures.push_back({canonical.string(), e.what()});
                    continue;
                }
            }
            if (!compatible(*obj, *nodes_[index].object)) continue;

            loaded_.insert(soname);
            if (result_.catalog.contains(canonical.string())) return true;
            result_.catalog.add({canonical.string(), Provenance::Recursive, obj});
            push_node(std::move(obj), candidate.parent_path().string(), static_cast<int>(index));
            return true;
        }
        return false;
    }

    const CorpusCatalog &input_;
    const SearchConfig &config_;
    ResolveResult result_;
    std::vector<Node> nodes_;
    std::unordered_set<std::string> loaded_;
};

} // namespace

ResolveResult resolve_recursive(const CorpusCatalog &catalog, const SearchConfig &config) {
    return Resolver(catalog, config).run();
}

} // namespace elfql::corpus
