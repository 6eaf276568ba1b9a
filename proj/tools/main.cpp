#include <iostream>

#include "vecfin/cli/commands.hpp"

int main(int argc, char** argv) { return vecfin::cli::run_cli(argc, argv, std::cout, std::cerr); }
