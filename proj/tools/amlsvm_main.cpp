#include "amlsvm/cli/commands.hpp"

#include <iostream>

int main(int argc, char **argv) { return amlsvm::cli::run_cli(argc, argv, std::cout, std::cerr); }
