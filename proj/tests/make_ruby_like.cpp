// Regenerates tests/data/ruby_like. The checked-in bytes are compared
// against this spec by the unit tests.
#include "support.hpp"

#include <iostream>

int main(int argc, char **argv) {
    const std::string out = argc > 1 ? argv[1] : "ruby_like";
    elfql::test::write_bytes(out, elfql::bench::build_elf(elfql::test::ruby_like_spec()));
    std::cout << "wrote " << out << "\n";
}
