#include "pscopf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pscopf::cli::run(argc, argv, std::cout, std::cerr); }
