#include "scgbin/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return scgbin::cli::run_cli(argc, argv, std::cout, std::cerr); }
