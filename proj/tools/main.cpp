#include "elfql/cli/cli.hpp"

#include <iostream>
#include <unistd.h>

int main(int argc, char **argv) {
    std::vector<std::string> args(argv, argv + argc);
    return elfql::cli::run(args, {std::cin, std::cout, std::cerr, ::isatty(STDIN_FILENO) != 0});
}
