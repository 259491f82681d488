#include <iostream>

#include "agrf/cli.hpp"

int main(int argc, char **argv) { return agrf::cli::run(argc, argv, std::cout, std::cerr); }
