#include <iostream>
#include <string>
#include <vector>

#include "complaints/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return complaints::run_cli(args, std::cout, std::cerr);
}
