#include <iostream>

#include "bph/cli.hpp"

int main(int argc, char** argv) { return bph::cli::run(argc, argv, std::cout, std::cerr); }
