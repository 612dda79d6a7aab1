#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return dbevo::cli::dispatch(args, std::cout, std::cerr);
}
