#include "nlsd/cli/commands.hpp"

#include <iostream>

int main(int argc, char **argv) { return nlsd::cli::run(argc, argv, std::cout, std::cerr); }
