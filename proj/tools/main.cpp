#include "dwave/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return dwave::cli::main(argc, argv, std::cout, std::cerr);
}
