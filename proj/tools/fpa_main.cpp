#include <iostream>

#include "fpa/cli.hpp"

int main(int argc, char** argv) { return fpa::cli::run(argc, argv, std::cout, std::cerr); }
