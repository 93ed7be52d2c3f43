#include <iostream>
#include <string>
#include <vector>

#include "taxoeval/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return taxoeval::cli::run(args, std::cout, std::cerr);
}
