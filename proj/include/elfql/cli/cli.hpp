#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace elfql::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Streams {
    std::istream &in;
    std::ostream &out;
    std::ostream &err;
    /// Print the repl prompt.
    bool interactive = false;
};

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name.
int run(const std::vector<std::string> &args, Streams io);

} // namespace elfql::cli
